use super::*;
use crate::magnetics::magnetic_translate;
use crate::pointsets::{generate, Generator, Window};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn square(n: usize, periodic: bool) -> DeloneSet {
    generate(&Generator::PeriodicSquare { spacing: 1.0 }, &Window::cube(2, 0.0, n as f64), 0, periodic).unwrap()
}

fn nn() -> HoppingProfile {
    HoppingProfile::nearest_neighbour(-1.0, 1.0)
}

fn no_onsite() -> Onsite {
    constant_onsite(vec![0.0])
}

#[test]
fn periodic_laplacian_spectrum() {
    let n = 16;
    let pitch = 0.25;
    let grid = GridBasis::new(Window::cube(1, 0.0, n as f64 * pitch), pitch, Boundary::Periodic).unwrap();
    let set = DeloneSet::new(vec![vec![0.0]], 1.0, 4.0, grid.window.clone()).unwrap();
    let h = assemble_continuum(&set, &AtomicPotential::Zero, &MagneticCocycle::zero(1), &grid).unwrap();
    let got = linalg::eigvalsh(&h.matrix);
    let mut want: Vec<f64> = (0..n)
        .map(|k| (2.0 - 2.0 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()) / (pitch * pitch))
        .collect();
    want.sort_by(f64::total_cmp);
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-10, "{g} vs {w}");
    }
}

#[test]
fn square_lattice_band() {
    let set = square(8, true);
    let h = assemble_tightbinding(&set, &nn(), &MagneticCocycle::zero(2), &no_onsite()).unwrap();
    let got = linalg::eigvalsh(&h.matrix);
    let mut want = Vec::new();
    for a in 0..8 {
        for b in 0..8 {
            let k = |m: usize| 2.0 * std::f64::consts::PI * m as f64 / 8.0;
            want.push(-2.0 * k(a).cos() - 2.0 * k(b).cos());
        }
    }
    want.sort_by(f64::total_cmp);
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-10);
    }
}

#[test]
fn zero_hopping_gives_onsite_diagonal() {
    let set = square(5, false);
    let onsite: Onsite = Arc::new(|p: &LocalPattern| vec![p.position[0] + 0.1 * p.neighbours.len() as f64]);
    let h = assemble_tightbinding(&set, &HoppingProfile::zero(1), &MagneticCocycle::planar(0.4), &onsite).unwrap();
    let Basis::Sites(b) = &h.basis else { unreachable!() };
    for i in 0..h.len() {
        for j in 0..h.len() {
            if i != j {
                assert_eq!(h.matrix[(i, j)], ZERO);
            }
        }
        assert!(h.matrix[(i, i)].re >= b.set.points[i][0]);
    }
}

/// Product of the link elements `M[p][q]` along `p0 -> p1 -> p2 -> p3 -> p0`.
fn loop_phase(h: &CMat, cycle: [usize; 4]) -> c64 {
    let mut z = c64::new(1.0, 0.0);
    for k in 0..4 {
        z *= h[(cycle[k], cycle[(k + 1) % 4])];
    }
    z
}

#[test]
fn every_plaquette_carries_the_flux() {
    for periodic in [false, true] {
        let n = 6;
        let alpha = 1.0 / 3.0;
        let set = square(n, periodic);
        let c = MagneticCocycle::flux(alpha);
        let h = assemble_tightbinding(&set, &nn(), &c, &no_onsite()).unwrap();
        let Basis::Sites(b) = &h.basis else { unreachable!() };
        let cells = if periodic { n } else { n - 1 };
        for i in 0..cells {
            for j in 0..cells {
                let at = |x: usize, y: usize| b.site_index(&[(x % n) as f64, (y % n) as f64]).unwrap();
                let cycle = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
                let z = loop_phase(&h.matrix, cycle);
                // counter-clockwise loop, amplitudes -1 each
                let want = c64::cis(-2.0 * std::f64::consts::PI * alpha);
                assert!((z - want).norm() < 1e-12, "plaquette ({i},{j}) periodic={periodic}: {z}");
            }
        }
    }
}

#[test]
fn torus_rejects_fractional_total_flux() {
    let set = square(5, true);
    let r = assemble_tightbinding(&set, &nn(), &MagneticCocycle::flux(1.0 / 3.0), &no_onsite());
    assert!(matches!(r, Err(Error::InvalidParameter(_))));
}

#[test]
fn translation_equivariance_on_torus() {
    let set = square(6, true);
    let c = MagneticCocycle::flux(1.0 / 3.0);
    let h = assemble_tightbinding(&set, &nn(), &c, &no_onsite()).unwrap();
    let n = h.len();
    for a in [[1.0, 0.0], [0.0, 1.0], [2.0, 3.0]] {
        let cols: Vec<Vec<c64>> = (0..n)
            .map(|j| magnetic_translate(&c, &a, &linalg::column(&linalg::identity(n), j), &h.basis).unwrap())
            .collect();
        let u = linalg::from_columns(n, &cols);
        let conj = &u * &h.matrix * u.adjoint();
        assert!(linalg::max_abs(&(conj - &h.matrix)) < 1e-12);
    }
}

#[test]
fn range_too_large() {
    let set = square(4, false);
    let hop = HoppingProfile::nearest_neighbour(-1.0, 1.0);
    assert!(matches!(
        assemble_tightbinding(&set, &hop, &MagneticCocycle::zero(2), &no_onsite()),
        Err(Error::RangeTooLarge { .. })
    ));
}

#[test]
fn continuum_preconditions() {
    let w = Window::cube(2, 0.0, 4.0);
    let set = square(4, false);
    let coarse = GridBasis::new(w.clone(), 0.5, Boundary::Open).unwrap();
    let c = MagneticCocycle::zero(2);
    assert!(matches!(
        assemble_continuum(&set, &AtomicPotential::Zero, &c, &coarse),
        Err(Error::PitchTooCoarse { .. })
    ));
    let fine = GridBasis::new(w, 0.1, Boundary::Open).unwrap();
    let gauss = AtomicPotential::Gaussian { amplitude: -1.0, width: 0.2, cutoff: None };
    assert!(matches!(assemble_continuum(&set, &gauss, &c, &fine), Err(Error::PotentialNotCompact)));
}

#[test]
fn free_hamiltonian_commutes_with_magnetic_translations_in_the_interior() {
    let pitch = 0.125;
    let grid = GridBasis::new(Window::cube(2, -3.0, 3.0), pitch, Boundary::Open).unwrap();
    let set = DeloneSet::new(vec![vec![0.0, 0.0]], 1.0, 10.0, grid.window.clone()).unwrap();
    let c = MagneticCocycle::planar(0.8);
    let h = assemble_continuum(&set, &AtomicPotential::Zero, &c, &grid).unwrap();
    let basis = h.basis.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let psi: Vec<c64> = (0..grid.len())
        .map(|i| {
            let x = grid.point(i);
            if x[0].abs() < 1.0 && x[1].abs() < 1.0 {
                c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            } else {
                ZERO
            }
        })
        .collect();
    let a = [0.5, -0.75];
    let hu = linalg::mat_vec(&h.matrix, &magnetic_translate(&c, &a, &psi, &basis).unwrap());
    let uh = magnetic_translate(&c, &a, &linalg::mat_vec(&h.matrix, &psi), &basis).unwrap();
    let diff: Vec<c64> = hu.iter().zip(&uh).map(|(x, y)| x - y).collect();
    let rel = linalg::norm(&diff) / linalg::norm(&psi);
    assert!(rel < 10.0 * pitch, "{rel}");
    assert!(rel < 1e-10, "{rel}");
}

fn random_kernel(rng: &mut ChaCha8Rng, set: &DeloneSet) -> KernelOperator {
    let basis = SiteBasis::new(set.clone(), 1);
    let n = basis.len();
    let pts = basis.set.points.clone();
    let m = CMat::from_fn(n, n, |i, j| {
        let d = crate::pointsets::distance(&pts[i], &pts[j], None);
        c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * (-d).exp()
    });
    KernelOperator::new(m, Basis::Sites(basis), MagneticCocycle::planar(0.3)).unwrap()
}

#[test]
fn convolution_unit_and_associativity() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let set = generate(&Generator::RandomHardcore { r: 0.5, big_r: 1.5 }, &Window::cube(2, 0.0, 5.0), 2, false).unwrap();
    let f = random_kernel(&mut rng, &set);
    let g = random_kernel(&mut rng, &set);
    let k = random_kernel(&mut rng, &set);
    let id = KernelOperator::new(linalg::identity(f.len()), f.basis.clone(), f.twist.clone()).unwrap();
    assert_eq!(twisted_convolve(&f, &id).unwrap().matrix, f.matrix);
    let left = twisted_convolve(&twisted_convolve(&f, &g).unwrap(), &k).unwrap();
    let right = twisted_convolve(&f, &twisted_convolve(&g, &k).unwrap()).unwrap();
    assert!(linalg::max_abs(&(left.matrix - right.matrix)) < 1e-10);
    let other = KernelOperator { twist: MagneticCocycle::zero(2), ..g };
    assert!(matches!(twisted_convolve(&f, &other), Err(Error::BasisMismatch)));
}

#[test]
fn seminorm_examples() {
    let set = square(8, true);
    let h = assemble_tightbinding(&set, &HoppingProfile::nearest_neighbour(1.0, 1.0), &MagneticCocycle::zero(2), &no_onsite()).unwrap();
    assert!((frechet_seminorm(&h, 0) - 4.0).abs() < 1e-8);
    assert!((frechet_seminorm(&h, 1) - 8.0).abs() < 1e-8);
    let diag = KernelOperator::new(
        CMat::from_fn(h.len(), h.len(), |i, j| if i == j { c64::new(i as f64 - 7.0, 0.0) } else { ZERO }),
        h.basis.clone(),
        h.twist.clone(),
    )
    .unwrap();
    let n0 = frechet_seminorm(&diag, 0);
    assert!((frechet_seminorm(&diag, 2) - n0).abs() < 1e-12);
}

#[test]
fn multi_index_counts() {
    assert_eq!(multi_indices(2, 0).len(), 1);
    assert_eq!(multi_indices(2, 1).len(), 3);
    assert_eq!(multi_indices(2, 2).len(), 6);
    assert_eq!(multi_indices(3, 2).len(), 10);
}

#[test]
fn resolvent_bound_examples() {
    let set = square(6, false);
    let h1 = assemble_tightbinding(&set, &nn(), &MagneticCocycle::planar(0.5), &no_onsite()).unwrap();
    let z = c64::new(0.3, 0.5);
    let same = resolvent_distance_bound_check(&h1, &h1, z, 0.0).unwrap();
    assert_eq!(same.lhs, 0.0);
    assert!(same.holds);
    let mut h2 = h1.clone();
    h2.matrix[(7, 7)] += c64::new(0.2, 0.0);
    let rep = resolvent_distance_bound_check(&h1, &h2, z, diagonal_sup_difference(&h1, &h2)).unwrap();
    assert!(rep.holds && rep.lhs > 0.0);
    assert!(rep.lhs <= 0.2 / (0.5 * 0.5) + 1e-12);
    assert!(matches!(resolvent_distance_bound_check(&h1, &h2, c64::new(1.0, 0.0), 0.2), Err(Error::RealShift)));
}

#[test]
fn binary_round_trip() {
    let set = square(4, true);
    let h = assemble_tightbinding(&set, &HoppingProfile::nearest_neighbour(-1.0, 1.0).clone(), &MagneticCocycle::flux(0.25), &no_onsite());
    // 4x4 with range 1.01 is exactly at the quarter-edge limit
    assert!(h.is_err());
    let set = square(8, true);
    let h = assemble_tightbinding(&set, &nn(), &MagneticCocycle::flux(0.25), &no_onsite()).unwrap();
    let mut buf = Vec::new();
    io::write_operator(&mut buf, &h).unwrap();
    assert_eq!(&buf[..4], b"AWKO");
    let back = io::read_operator(buf.as_slice()).unwrap();
    assert_eq!(back.matrix, h.matrix);
    assert_eq!(back.basis, h.basis);
    assert_eq!(back.twist, h.twist);
    assert!(back.hermitian);
}

/// Lowest eigenvalues of the free magnetic Laplacian on the torus.
fn landau_spectrum(quanta: usize, pitch: f64) -> (f64, Vec<f64>) {
    let edge = 8.0;
    let b = 2.0 * std::f64::consts::PI * quanta as f64 / (edge * edge);
    let window = Window::cube(2, 0.0, edge);
    let set = DeloneSet::new(vec![vec![4.0, 4.0]], 3.0, 8.0, window.clone()).unwrap().with_periodic(true);
    let grid = GridBasis::new(window, pitch, Boundary::Periodic).unwrap();
    let h = assemble_continuum(&set, &AtomicPotential::Zero, &MagneticCocycle::planar(b), &grid).unwrap();
    (b, linalg::eigvalsh(&h.matrix))
}

#[test]
fn landau_levels() {
    // Levels b(2n+1), each with one state per flux quantum.
    let quanta = 8;
    let (b, fine) = landau_spectrum(quanta, 0.25);
    let (_, coarse) = landau_spectrum(quanta, 0.5);
    let level_error = |values: &[f64], n: usize| {
        values[n * quanta..(n + 1) * quanta].iter().map(|e| (e - b * (2 * n + 1) as f64).abs()).fold(0.0, f64::max)
    };
    for n in 0..2 {
        let e = level_error(&fine, n);
        assert!(e < 0.02 * b * (2 * n + 1) as f64, "level {n}: error {e}");
        let spread = fine[(n + 1) * quanta - 1] - fine[n * quanta];
        assert!(spread < 1e-6, "level {n} not degenerate: {spread}");
        // second-order stencil
        let ratio = level_error(&coarse, n) / e;
        assert!((3.0..5.0).contains(&ratio), "level {n}: ratio {ratio}");
    }
    assert!(fine[2 * quanta] - fine[2 * quanta - 1] > b);
}
