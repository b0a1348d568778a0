use proptest::prelude::*;
use sns_core::noise::tagged_stream;
use sns_core::spectral::*;

fn rough(grid: &TorusGrid, seed: u64, solenoidal: bool) -> SpectralField {
    let opts = RandomFieldOptions { decay: 1.0, dealiased: false, solenoidal };
    random_field_with(grid, &opts, &mut tagged_stream("spectral-test", seed, 0))
}

fn grids() -> Vec<TorusGrid> {
    vec![TorusGrid::new(2, 32).unwrap(), TorusGrid::new(3, 16).unwrap()]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

#[test]
fn leray_projection_is_an_orthogonal_projector() {
    for g in grids() {
        for seed in 0..10 {
            let u = rough(&g, seed, false);
            let p = u.leray_project();
            let pp = p.leray_project();
            let mut diff = pp.clone();
            diff.axpy(-1.0, &p);
            assert!(diff.norm_h() <= 1e-14 * p.norm_h());
            assert!(p.divergence_residual() <= 1e-12);
            let mut rest = u.clone();
            rest.axpy(-1.0, &p);
            let cross = p.inner(&rest, InnerProduct::H).unwrap();
            assert!(cross.abs() <= 1e-12 * u.norm_sq(InnerProduct::H));
            assert!(p.hermitian_defect() <= 1e-14);
        }
    }
}

#[test]
fn parseval_and_transform_roundtrip() {
    for g in grids() {
        for seed in 0..5 {
            let u = rough(&g, seed, true);
            let phys = u.to_physical();
            assert!(rel(phys.mean_energy(), u.norm_sq(InnerProduct::H)) <= 1e-12);
            let back = phys.to_spectral();
            let mut diff = back.clone();
            diff.axpy(-1.0, &u);
            assert!(diff.norm_h() <= 1e-12 * u.norm_h());
        }
    }
}

#[test]
fn fractional_powers_of_the_stokes_operator() {
    for g in grids() {
        let u = rough(&g, 3, true);
        let half = u.apply_a_power(0.5, 1.0).unwrap();
        assert!(rel(half.norm_h(), u.norm_v()) <= 1e-12);
        let one = u.apply_a_power(1.0, 0.7).unwrap();
        let a = u.apply_a(0.7).unwrap();
        let mut diff = one.clone();
        diff.axpy(-1.0, &a);
        assert!(diff.norm_h() <= 1e-14 * a.norm_h());
        let round = u.apply_a_power(-1.0, 0.3).unwrap().apply_a_power(1.0, 0.3).unwrap();
        let mut diff = round.clone();
        diff.axpy(-1.0, &u);
        assert!(diff.norm_h() <= 1e-12 * u.norm_h());
        assert!(rel(u.norm_hm(0.0), u.norm_h()) <= 1e-12);
    }
}

#[test]
fn galerkin_inverse_inequalities() {
    let a_norm = |u: &SpectralField, alpha: f64| u.apply_a_power(alpha, 1.0).unwrap().norm_h();
    for g in grids() {
        let total = g.pair_count();
        for seed in 0..4 {
            let u = rough(&g, seed, true);
            for n in [1, 7, total / 3, total - 1] {
                let proj = GalerkinProjector::new(&g, n).unwrap();
                let lam = proj.lambda_n();
                let (p, q) = (proj.project(&u), proj.complement(&u));
                for (a1, a2) in [(0.0, 0.5), (0.5, 1.0), (-0.5, 1.5), (0.25, 0.3)] {
                    let lhs = a_norm(&p, a2);
                    assert!(lhs <= lam.powf(a2 - a1) * a_norm(&p, a1) * (1.0 + 1e-12));
                    let lhs = a_norm(&q, a1);
                    assert!(lhs <= lam.powf(a1 - a2) * a_norm(&q, a2) * (1.0 + 1e-12));
                }
            }
        }
        let all = GalerkinProjector::new(&g, total).unwrap();
        let u = rough(&g, 9, true);
        assert_eq!(all.project(&u), u);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projection_algebra(seed in any::<u64>(), s in -3.0f64..3.0, d3 in any::<bool>()) {
        let g = if d3 { TorusGrid::new(3, 8).unwrap() } else { TorusGrid::new(2, 16).unwrap() };
        let u = rough(&g, seed, false);
        let v = rough(&g, seed.wrapping_add(1), false);
        // Linearity of the projection.
        let mut w = u.clone();
        w.axpy(s, &v);
        let mut lhs = w.leray_project();
        let mut rhs = u.leray_project();
        rhs.axpy(s, &v.leray_project());
        lhs.axpy(-1.0, &rhs);
        prop_assert!(lhs.norm_h() <= 1e-13 * (1.0 + w.norm_h()));
        // Contraction in every diagonal norm.
        for kind in [InnerProduct::H, InnerProduct::V, InnerProduct::DA, InnerProduct::Hm(3.0)] {
            prop_assert!(u.leray_project().norm(kind) <= u.norm(kind) * (1.0 + 1e-14));
        }
        // P_n and Q_n split every field orthogonally.
        let n = (seed % g.pair_count() as u64) as usize;
        let proj = GalerkinProjector::new(&g, n).unwrap();
        let (p, q) = (proj.project(&u), proj.complement(&u));
        prop_assert!(p.inner(&q, InnerProduct::V).unwrap().abs() <= 1e-12 * u.norm_sq(InnerProduct::V));
        prop_assert!(rel(p.norm_sq(InnerProduct::H) + q.norm_sq(InnerProduct::H), u.norm_sq(InnerProduct::H)) <= 1e-12);
    }

    #[test]
    fn text_roundtrip_is_exact(seed in any::<u64>()) {
        let g = TorusGrid::new(2, 8).unwrap();
        let u = rough(&g, seed, true);
        prop_assert_eq!(io::from_text(&io::to_text(&u)).unwrap(), u);
    }
}
