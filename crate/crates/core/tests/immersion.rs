use curvflow::ambient::AmbientModel;
use curvflow::immersion::*;

fn state(fam: &Family, h: f64, size: usize) -> HypersurfaceState {
    HypersurfaceState::build(&fam.build_patch(&fam.sample_center(), h, size).unwrap()).unwrap()
}

fn sorted_eigs(op: &curvflow::tensor::Operator) -> Vec<f64> {
    let mut v: Vec<f64> = op.0.clone().eigenvalues().unwrap().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn plane_is_totally_geodesic() {
    let st = state(&Family::PlaneR3, 0.05, 9);
    for i in st.interior(2) {
        let p = st.point(i);
        assert!(p.a.amax() < 1e-10);
        assert!(p.mean_curvature.abs() < 1e-10);
        assert_eq!(p.jacobi.amax(), 0.0);
    }
    let rep = adaptedness_report(&st, 3).unwrap();
    assert!(rep.max_rho < 1e-20 && rep.max_s_hat < 1e-10);
}

#[test]
fn round_sphere_is_umbilic() {
    for r0 in [0.5, 1.0, 2.0] {
        let st = state(&Family::SphereR3 { r0 }, 0.01, 9);
        let p = st.point(st.grid().center());
        for e in sorted_eigs(&p.a) {
            assert!((e - 1.0 / r0).abs() < 1e-4 / r0, "r0={r0}: {e}");
        }
        assert!((p.mean_curvature - 2.0 / r0).abs() < 2e-4 / r0);
    }
}

#[test]
fn cp2_sphere_principal_curvatures_match_spectrum() {
    for r0 in [0.5, 0.7, 0.9] {
        let fam = Family::Cp2GeodesicSphere { r0 };
        let st = state(&fam, 0.01, 9);
        let p = st.point(st.grid().center());
        let mut expected: Vec<f64> = fam
            .spectrum()
            .unwrap()
            .entries()
            .iter()
            .flat_map(|e| std::iter::repeat(e.lambda).take(e.mult))
            .collect();
        expected.sort_by(f64::total_cmp);
        for (got, want) in sorted_eigs(&p.a).iter().zip(&expected) {
            assert!((got - want).abs() < 1e-3, "r0={r0}: {got} vs {want}");
        }
        let j = sorted_eigs(&p.jacobi);
        assert!((j[0] - 1.0).abs() < 1e-10 && (j[1] - 1.0).abs() < 1e-10 && (j[2] - 4.0).abs() < 1e-10);
    }
}

#[test]
fn structural_identities_converge_on_cp2() {
    let fam = Family::Cp2GeodesicSphere { r0: 0.7 };
    let levels: Vec<Vec<IdentityResidual>> = [0.04, 0.02]
        .iter()
        .map(|&h| {
            let st = state(&fam, h, 11);
            let mut v = gauss_codazzi_residual(&st, 3).unwrap();
            v.push(jacobi_derivative_residual(&st, 3).unwrap());
            v.extend(second_order_identities(&st, 3).unwrap());
            v
        })
        .collect();
    for (coarse, fine) in levels[0].iter().zip(&levels[1]) {
        assert_eq!(coarse.tag, fine.tag);
        // Identities that vanish to round-off at both levels need no ratio.
        if coarse.residual < 1e-9 {
            continue;
        }
        let ratio = coarse.residual / fine.residual;
        assert!(ratio > 3.0, "{}: {} -> {}", coarse.tag, coarse.residual, fine.residual);
    }
}

#[test]
fn printed_second_order_identities_fail_on_cp2() {
    let st = state(&Family::Cp2GeodesicSphere { r0: 0.7 }, 0.02, 11);
    let so = second_order_identities(&st, 3).unwrap();
    for r in so.iter().filter(|r| r.tag == "(3.10)" || r.tag == "(3.11)") {
        assert!(r.residual < 5e-2, "{} {:?}", r.tag, r);
        assert!(r.printed.unwrap() > 100.0 * r.residual, "{}", r.tag);
    }
}

#[test]
fn curvature_adapted_families_have_zero_gap() {
    for fam in [
        Family::SphereR3 { r0: 1.0 },
        Family::CliffordTorusS3,
        Family::EquatorSphere { n: 3 },
        Family::HyperbolicSphereH3 { r0: 1.0 },
        Family::Cp2GeodesicSphere { r0: 0.7 },
    ] {
        let rep = adaptedness_report(&state(&fam, 0.02, 11), 3).unwrap();
        assert!(rep.max_rho < 1e-10, "{}: {}", fam.name(), rep.max_rho);
        assert!(rep.rho_consistency < 1e-10, "{}", fam.name());
    }
}

#[test]
fn perturbed_cp2_is_not_curvature_adapted() {
    let fam = Family::Cp2Perturbed { r0: 0.7, seed: 1, amplitude: 0.05 };
    let rep = adaptedness_report(&state(&fam, 0.02, 11), 3).unwrap();
    assert!(rep.max_rho > 1e-2, "{}", rep.max_rho);
    assert!(rep.rho_consistency < 1e-8 * (1.0 + rep.max_rho));
    assert!(rep.points.iter().all(|p| p.rho >= 0.0));
}

#[test]
fn gap_shrinks_with_amplitude() {
    let rho = |amplitude| {
        let fam = Family::Cp2Perturbed { r0: 0.7, seed: 3, amplitude };
        adaptedness_report(&state(&fam, 0.02, 11), 3).unwrap().max_rho
    };
    let (big, small) = (rho(0.04), rho(0.01));
    // ρ is quadratic in the perturbation.
    assert!(big / small > 10.0, "{big} {small}");
}

#[test]
fn grid_file_round_trip() {
    let fam = Family::SphereR3 { r0: 1.0 };
    let im = fam.build_patch(&fam.sample_center(), 0.02, 9).unwrap();
    let g = im.grid().clone();
    let mut text = String::from("# sphere patch\n");
    for (k, x) in im.points().iter().enumerate() {
        let m = g.multi(k);
        text.push_str(&format!("{} {} {:.17e} {:.17e} {:.17e}\n", m[0], m[1], x[0], x[1], x[2]));
    }
    let parsed = parse_grid_file(&text, AmbientModel::euclidean(3), g.spacing(), &[false, false], 1.0).unwrap();
    let a = HypersurfaceState::build(&im).unwrap();
    let b = HypersurfaceState::build(&parsed).unwrap();
    let c = g.center();
    assert!((a.point(c).mean_curvature - b.point(c).mean_curvature).abs() < 1e-12);
}

#[test]
fn grid_file_errors() {
    let amb = || AmbientModel::euclidean(3);
    assert!(parse_grid_file("", amb(), &[0.1, 0.1], &[false, false], 1.0).is_err());
    assert!(parse_grid_file("0 0 1 2\n", amb(), &[0.1, 0.1], &[false, false], 1.0).is_err());
    let missing = "0 0 0 0 0\n1 1 1 1 0\n";
    assert!(parse_grid_file(missing, amb(), &[0.1, 0.1], &[false, false], 1.0).is_err());
    let dup = "0 0 0 0 0\n0 0 1 1 0\n";
    assert!(parse_grid_file(dup, amb(), &[0.1, 0.1], &[false, false], 1.0).is_err());
}

#[test]
fn catalog_lists_every_family() {
    let cat = catalog();
    assert_eq!(cat.len(), 7);
    for info in &cat {
        assert!(Family::parse(&info.name).is_ok(), "{}", info.name);
    }
    assert!(cat.iter().any(|i| i.status.starts_with("generically not")));
}

#[test]
fn family_parse_rejects_bad_input() {
    for bad in ["nope", "sphere-r3(-1)", "cp2-geodesic-sphere(2.0)", "sphere-r3(1", "equator-s(7)"] {
        assert!(Family::parse(bad).is_err(), "{bad}");
    }
}
