//! Moore-Penrose inverse of a rank-deficient matrix and a ridge-stabilized
//! solve.

use cpscreen::numerics::{matrix_from_rows, pinv, rel_frobenius, solve_spd, vector_from, DEFAULT_RTOL};

fn main() -> cpscreen::Result<()> {
    // rank 1: the second row is twice the first
    let a = matrix_from_rows(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0])?;
    let x = pinv(&a, DEFAULT_RTOL)?;
    println!("pinv(A) =\n{x:.5}");
    println!("‖AXA − A‖/‖A‖ = {:.2e}", rel_frobenius(&(&a * &x * &a), &a));

    let spd = matrix_from_rows(2, 2, &[4.0, 1.0, 1.0, 3.0])?;
    let b = vector_from(&[1.0, 2.0])?;
    for ridge in [0.0, 1.0] {
        let sol = solve_spd(&spd, &b, ridge)?;
        println!("ridge {ridge}: x = [{:.5}, {:.5}]", sol[0], sol[1]);
    }
    Ok(())
}
