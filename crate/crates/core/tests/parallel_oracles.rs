use curvflow::ambient::AmbientModel;
use curvflow::parallel::{
    flow_ode, focal_radius, parallel_eigenvalue, Direction, IsoparametricSpectrum, StopReason,
};
use curvflow::tensor::Vector;

/// Transport λ along the normal geodesic with the ambient Jacobi integrator and
/// compare with the closed form, for every eigendirection of R̃(ξ).
fn jacobi_ode_agreement(model: &AmbientModel, p: Vector, lambdas: &[f64], r: f64) -> f64 {
    let g = model.metric(&p);
    let mut v = Vector::from_fn(model.dim(), |i, _| 0.3 + 0.2 * i as f64);
    v /= (v.transpose() * &g * &v)[(0, 0)].sqrt();
    let nj = model.normal_jacobi(&p, &v).unwrap();
    let eig = nj.jacobi.matrix().clone().symmetric_eigen();
    let mut worst = 0.0f64;
    for k in 0..eig.eigenvalues.len() {
        let nu = eig.eigenvalues[k];
        let j0 = &nj.basis * eig.eigenvectors.column(k);
        for &lam in lambdas {
            let dj0 = &j0 * lam;
            let s = model.integrate_jacobi_field(&p, &v, &j0, &dj0, r, 4000).unwrap();
            let gq = model.metric(&s.point);
            let ip = |a: &Vector, b: &Vector| (a.transpose() * &gq * b)[(0, 0)];
            let numeric = ip(&s.derivative, &s.field) / ip(&s.field, &s.field);
            let closed = parallel_eigenvalue(lam, nu, r).unwrap();
            worst = worst.max((numeric - closed).abs());
        }
    }
    worst
}

#[test]
fn jacobi_ode_matches_closed_form_in_space_forms() {
    let p = Vector::from_vec(vec![0.1, -0.05, 0.08]);
    for model in [
        AmbientModel::euclidean(3),
        AmbientModel::sphere(1.0, 3).unwrap(),
        AmbientModel::hyperbolic(-1.0, 3).unwrap(),
    ] {
        for r in [-0.3, 0.25] {
            let err = jacobi_ode_agreement(&model, p.clone(), &[0.8, -0.4, 1.7], r);
            assert!(err < 1e-8, "{:?} r={r}: {err}", model.kind());
        }
    }
}

#[test]
fn jacobi_ode_matches_closed_form_in_cp2() {
    let model = AmbientModel::complex_projective(4.0, 2).unwrap();
    let p = Vector::from_vec(vec![0.2, 0.1, -0.15, 0.05]);
    for r in [-0.2, 0.3] {
        let err = jacobi_ode_agreement(&model, p.clone(), &[1.187, 0.345, -0.5], r);
        assert!(err < 1e-8, "r={r}: {err}");
    }
}

#[test]
fn focal_radius_matches_closed_forms() {
    // Geodesic sphere in S³ of radius 0.6: outward focal point at r = π − 0.6.
    let s = IsoparametricSpectrum::parse(&format!("({} 1 2)", 1.0 / 0.6f64.tan()), "sphere").unwrap();
    let (a, b) = focal_radius(&s, 1.0, 10.0, 1e-12).unwrap();
    assert!(a <= std::f64::consts::PI - 0.6 + 1e-12 && std::f64::consts::PI - 0.6 <= b + 1e-12);
    let (a, b) = focal_radius(&s, -1.0, 10.0, 1e-12).unwrap();
    assert!(a <= -0.6 + 1e-12 && -0.6 <= b + 1e-12);
    // Horosphere-like data in H³ never focalizes outward.
    let h = IsoparametricSpectrum::parse("(1 -1 2)", "hyperbolic").unwrap();
    assert!(focal_radius(&h, 1.0, 20.0, 1e-12).is_none());
}

#[test]
fn cp2_sphere_collapses_at_the_center() {
    let r0 = 0.7;
    let s = IsoparametricSpectrum::cp2_geodesic_sphere(r0).unwrap();
    let tr = flow_ode(&s, 1.0, 1e-4, Direction::Forward).unwrap();
    assert_eq!(tr.stop, StopReason::FocalApproach);
    let c = tr.collapse.unwrap();
    assert!(c.r_focal.0 <= -r0 + 1e-10 && -r0 - 1e-10 <= c.r_focal.1, "{c:?}");
    assert!(c.t_collapse.1 - c.t_collapse.0 < 1e-8);
    assert!(tr.steps.iter().all(|st| st.rho == 0.0));
}
