//! Cross-module invariants: algebraic identities between the factorized
//! preconditioners and their dense references, spectral properties of the
//! assembled kernel matrices, and the screening behavior of the regularized
//! Schur complement.

use afn_precond::geometry::{fps_sample, uniform_sample, PointSet};
use afn_precond::kernel::{assemble_block, assemble_full, KernelSpec};
use afn_precond::linalg::{cholesky, spd_solve, sym_eig, sym_eigenvalues, JitterPolicy};
use afn_precond::mat::{dot, norm2, Mat};
use afn_precond::precond::{
    apply_afn_inv, apply_fsai_inv, apply_nystrom_inv, build_afn, build_fsai_plain, build_nystrom,
    nystrom_error, schur_complement_dense,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn random_points(seed: u64, n: usize, d: usize, edge: f64) -> PointSet {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let coords: Vec<f64> = (0..n * d).map(|_| rng.gen::<f64>() * edge).collect();
    PointSet::new(coords, d).unwrap()
}

/// Sherman-Morrison-Woodbury on the eigenform Nystrom approximation:
/// `(U' L U'^T + mu I)^{-1} = I/mu - U'(mu L^{-1} + U'^T U')^{-1} U'^T / mu`
/// applied to a vector must match the direct dense inverse.
#[test]
fn smw_identity_matches_direct_inverse() {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    for trial in 0..25 {
        let n = rng.gen_range(20..=60);
        let k = rng.gen_range(2..=6);
        let ps = random_points(1000 + trial, n, 2, 4.0);
        let mu = 0.1;
        let spec = KernelSpec::gaussian(1.0, mu).unwrap();
        let sel = fps_sample(&ps, k, ps.centroid_seed()).unwrap();

        let w = assemble_block(&spec, &ps, &sel.indices, &sel.indices)
            .unwrap()
            .values;
        let all: Vec<usize> = (0..n).collect();
        let c = assemble_block(&spec, &ps, &all, &sel.indices)
            .unwrap()
            .values;

        // Nystrom extension of the landmark eigenvectors: U~ = C V L^{-1}
        let (lam, v) = sym_eig(&w).unwrap();
        let mut u_ext = c.matmul(&v);
        for i in 0..n {
            for (j, l) in lam.iter().enumerate() {
                u_ext[(i, j)] /= l;
            }
        }

        let r: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();

        // SMW route
        let ut_r = u_ext.matvec_t(&r);
        let mut inner = u_ext.transpose().matmul(&u_ext);
        for (j, l) in lam.iter().enumerate() {
            inner[(j, j)] += mu / l;
        }
        let inner_chol = cholesky(&inner, &JitterPolicy::default()).unwrap();
        let solved = spd_solve(&inner_chol, &ut_r);
        let back = u_ext.matvec(&solved);
        let smw: Vec<f64> = r
            .iter()
            .zip(&back)
            .map(|(ri, bi)| ri / mu - bi / mu)
            .collect();

        // direct route: (U~ diag(lam) U~' + mu I)^{-1} r
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for (cidx, l) in lam.iter().enumerate() {
                    s += u_ext[(i, cidx)] * l * u_ext[(j, cidx)];
                }
                m[(i, j)] = s + if i == j { mu } else { 0.0 };
            }
        }
        let m_chol = cholesky(&m, &JitterPolicy::default()).unwrap();
        let direct = spd_solve(&m_chol, &r);

        let scale = norm2(&direct);
        let mut diff = 0.0;
        for (a, b) in smw.iter().zip(&direct) {
            diff += (a - b) * (a - b);
        }
        let rel = diff.sqrt() / scale;
        assert!(
            rel <= 1e-8,
            "trial {trial}: SMW vs direct relative error {rel}"
        );
    }
}

#[test]
fn kernel_matrices_are_spsd() {
    for (i, spec) in [
        KernelSpec::gaussian(2.0, 0.0).unwrap(),
        KernelSpec::matern32(1.5, 0.0).unwrap(),
        KernelSpec::inverse_multiquadric(1.0, 1.0, 0.0).unwrap(),
    ]
    .iter()
    .enumerate()
    {
        let ps = random_points(40 + i as u64, 200, 3, 5.0);
        let k = assemble_full(spec, &ps);
        let evals = sym_eigenvalues(&k).unwrap();
        let knorm = evals[0].abs().max(evals.last().unwrap().abs());
        let min = evals.last().unwrap();
        assert!(
            *min >= -1e-10 * knorm,
            "kernel {i}: min eigenvalue {min}, norm {knorm}"
        );
    }
}

/// The Nystrom approximation reproduces the landmark block row and column of
/// K exactly, and K - K_nys is positive semidefinite.
#[test]
fn nystrom_block_structure_and_psd_residual() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    for trial in 0..20 {
        let n = rng.gen_range(40..=100);
        let k = rng.gen_range(4..=12);
        let ps = random_points(500 + trial, n, 2, 10.0);
        let spec = KernelSpec::gaussian(2.0, 1e-4).unwrap();
        let sel = fps_sample(&ps, k, ps.centroid_seed()).unwrap();
        let p = build_nystrom(&spec, &ps, &sel).unwrap();

        let kmat = assemble_full(&spec, &ps);
        let evals_k = sym_eigenvalues(&kmat).unwrap();
        let knorm = evals_k[0].abs().max(evals_k.last().unwrap().abs());

        // residual R = K - U diag(w) U'
        let u = p.basis();
        let mut r = kmat.clone();
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for (c, w) in p.eigenvalues().iter().enumerate() {
                    s += u[(i, c)] * w * u[(j, c)];
                }
                r[(i, j)] -= s;
            }
        }
        // landmark rows and columns vanish
        for &a in &sel.indices {
            for j in 0..n {
                assert!(
                    r[(a, j)].abs() <= 1e-10 * knorm.max(1.0),
                    "trial {trial}: residual row entry ({a},{j}) = {}",
                    r[(a, j)]
                );
            }
        }
        let evals_r = sym_eigenvalues(&r).unwrap();
        assert!(
            *evals_r.last().unwrap() >= -1e-8 * knorm,
            "trial {trial}: residual min eigenvalue {}",
            evals_r.last().unwrap()
        );
    }
}

/// With a dense FSAI pattern and no jitter, the AFN preconditioner is the
/// exact regularized kernel matrix: `M^{-1}(K + mu I) v = v`.
#[test]
fn afn_exactness_with_dense_pattern() {
    let n = 300;
    let k = 60;
    let ps = random_points(9, n, 3, 6.7);
    let spec = KernelSpec::gaussian(2.0, 1e-4).unwrap();
    let f = build_afn(&spec, &ps, k, n - k).unwrap();
    assert_eq!(f.jitter(), 0.0);

    let mut a = assemble_full(&spec, &ps);
    a.add_diagonal(spec.mu());
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    for _ in 0..5 {
        let v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        let av = a.matvec(&v);
        let round_trip = apply_afn_inv(&f, &av);
        let mut diff = 0.0;
        for (x, y) in round_trip.iter().zip(&v) {
            diff += (x - y) * (x - y);
        }
        let rel = diff.sqrt() / norm2(&v);
        assert!(rel <= 1e-8, "round-trip relative error {rel}");
    }
}

/// All four preconditioner applies are symmetric positive definite
/// operators.
#[test]
fn preconditioner_applies_are_spd() {
    let n = 150;
    let ps = random_points(13, n, 3, 5.3);
    let spec = KernelSpec::gaussian(1.5, 1e-4).unwrap();

    let fps_sel = fps_sample(&ps, 30, ps.centroid_seed()).unwrap();
    let ran_sel = uniform_sample(&ps, 30, 7).unwrap();
    let nys_fps = build_nystrom(&spec, &ps, &fps_sel).unwrap();
    let nys_ran = build_nystrom(&spec, &ps, &ran_sel).unwrap();
    let fsai = build_fsai_plain(&spec, &ps, 20).unwrap();
    let afn = build_afn(&spec, &ps, 30, 20).unwrap();

    type Apply<'a> = Box<dyn Fn(&[f64]) -> Vec<f64> + 'a>;
    let applies: Vec<(&str, Apply)> = vec![
        (
            "nystrom-fps",
            Box::new(|r: &[f64]| apply_nystrom_inv(&nys_fps, r)),
        ),
        (
            "nystrom-ran",
            Box::new(|r: &[f64]| apply_nystrom_inv(&nys_ran, r)),
        ),
        ("fsai", Box::new(|r: &[f64]| apply_fsai_inv(&fsai, r))),
        ("afn", Box::new(|r: &[f64]| apply_afn_inv(&afn, r))),
    ];

    let mut rng = ChaCha20Rng::seed_from_u64(21);
    for (name, apply) in &applies {
        for _ in 0..25 {
            let u: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
            let v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
            let mu_ = apply(&u);
            let mv = apply(&v);
            let lhs = dot(&mu_, &v);
            let rhs = dot(&u, &mv);
            assert!(
                (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0),
                "{name}: adjoint defect {lhs} vs {rhs}"
            );
            assert!(dot(&u, &mu_) > 0.0, "{name}: operator not positive");
        }
    }
}

/// Conditioning on well-spread landmarks concentrates the Schur complement:
/// after max-entry normalization it has a larger fraction of entries below
/// 1e-10 than the plain regularized trailing block.
#[test]
fn screening_effect_sparsifies_schur_complement() {
    let n = 1000;
    let mu = 1e-4;
    let ps = random_points(0, n, 3, 10.0);
    let spec = KernelSpec::gaussian(5.0, mu).unwrap();
    let sel = fps_sample(&ps, 100, ps.centroid_seed()).unwrap();

    let (schur, rest) = schur_complement_dense(&spec, &ps, &sel.indices).unwrap();
    let mut k22 = assemble_block(&spec, &ps, &rest, &rest).unwrap().values;
    k22.add_diagonal(mu);

    // normalize both matrices by the same maximum entry so the entry
    // magnitudes are compared on one scale
    let max = schur.max_abs().max(k22.max_abs());
    let frac_small = |m: &Mat| {
        let total = (m.nrows() * m.ncols()) as f64;
        let small = m.data().iter().filter(|v| v.abs() / max < 1e-10).count() as f64;
        small / total
    };

    let f_schur = frac_small(&schur);
    let f_plain = frac_small(&k22);
    assert!(
        f_schur > f_plain,
        "screening: schur fraction {f_schur} must exceed plain fraction {f_plain}"
    );
}

/// Smaller fill distance (more landmarks along the FPS ordering) gives a
/// smaller approximation error, and the error norm is non-increasing for
/// nested selections.
#[test]
fn nystrom_error_tracks_fill_distance() {
    let mut h_small = Vec::new();
    let mut h_large = Vec::new();
    let mut e_small = Vec::new();
    let mut e_large = Vec::new();
    for seed in 0..5 {
        let ps = random_points(700 + seed, 120, 3, 4.9);
        let spec = KernelSpec::gaussian(1.5, 0.0).unwrap();
        let sel75 = fps_sample(&ps, 75, ps.centroid_seed()).unwrap();
        let sel25 = fps_sample(&ps, 25, ps.centroid_seed()).unwrap();
        h_small.push(*sel75.fill_trace.last().unwrap());
        h_large.push(*sel25.fill_trace.last().unwrap());
        e_small.push(nystrom_error(&spec, &ps, &sel75).unwrap());
        e_large.push(nystrom_error(&spec, &ps, &sel25).unwrap());
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    };
    let (h1, h2) = (median(&mut h_small), median(&mut h_large));
    let (e1, e2) = (median(&mut e_small), median(&mut e_large));
    assert!(h1 < h2, "larger selection must have smaller fill distance");
    assert!(
        e1 <= e2,
        "median error must not increase as fill distance shrinks: {e1} vs {e2}"
    );
}
