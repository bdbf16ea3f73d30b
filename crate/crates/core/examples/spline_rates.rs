// Evaluate and integrate a B-spline rate function.

use csbm::spline::{rate_gradient, RateQuery};
use csbm::{RateCoeffs, SplineBasis};

pub fn run_example() -> csbm::Result<()> {
    let basis = SplineBasis::default();
    println!("degree {}, {} basis functions, knots {:?}", basis.degree(), basis.n_basis(), basis.knots());
    // log-coefficients: a rate rising from 0.3 to 1.2 per second
    let n = basis.n_basis();
    let coeffs = RateCoeffs((0..n).map(|p| (0.3 + 0.9 * p as f64 / (n - 1) as f64).ln()).collect());
    for t in [0.0, 6.0, 12.0, 18.0, 24.0] {
        println!("rate({t:>4}) = {:.4}", basis.rate(&coeffs, t)?);
    }
    println!("integral over [0, 24] = {:.4}", basis.rate_integral(&coeffs, 0.0, 24.0)?);
    let grad = rate_gradient(&basis, &coeffs, RateQuery::Interval(2.0, 5.0))?;
    println!("d/dc of the integral over [2, 5]: {grad:.4?}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> csbm::Result<()> {
    run_example()
}
