//! Cocycle identities and the composition law of magnetic translations on a grid.

use aperiodic_wannier::linalg::{self, c64};
use aperiodic_wannier::magnetics::{cocycle_identity_residual, magnetic_translate, sigma, MagneticCocycle};
use aperiodic_wannier::operators::{Basis, Boundary, GridBasis};
use aperiodic_wannier::pointsets::Window;

fn main() -> aperiodic_wannier::Result<()> {
    let c = MagneticCocycle::planar(0.8);
    let (x, y, z) = ([1.0, 0.5], [-0.25, 2.0], [0.75, -1.5]);
    println!("sigma(x, y) = {:.6}", sigma(&c, &x, &y));
    println!("2-cocycle residual = {:.2e}", cocycle_identity_residual(&c, &x, &y, &z));

    let grid = GridBasis::new(Window::cube(2, -4.0, 4.0), 0.25, Boundary::Open)?;
    let basis = Basis::Grid(grid.clone());
    let psi: Vec<c64> = (0..grid.len())
        .map(|i| {
            let p = grid.point(i);
            c64::new((-4.0 * (p[0] * p[0] + p[1] * p[1])).exp(), 0.0)
        })
        .collect();
    let (a, b) = ([0.5, 0.25], [-0.75, 1.0]);
    let ab = [a[0] + b[0], a[1] + b[1]];
    let two = magnetic_translate(&c, &a, &magnetic_translate(&c, &b, &psi, &basis)?, &basis)?;
    let one = magnetic_translate(&c, &ab, &psi, &basis)?;
    let phase = c.phase(&a, &b, -0.5);
    let err = two.iter().zip(&one).map(|(u, v)| (u - phase * v).norm()).fold(0.0, f64::max);
    println!("U_a U_b - exp(i<a,theta b>/2) U_(a+b): {err:.2e}");
    println!("norm before {:.6}, after {:.6}", linalg::norm(&psi), linalg::norm(&one));
    Ok(())
}
