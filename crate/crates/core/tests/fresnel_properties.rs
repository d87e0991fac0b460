use num_complex::Complex64;
use plasmon_core::fresnel::{
    self, critical_index, inflection_index, reflection_coefficient, resonance_angle, transfer_matrix_reflection,
    Layer,
};
use plasmon_core::materials::{ComplexPermittivity, DispersionTable};
use plasmon_core::{IncidenceGeometry, KretschmannStack, MetalModel};
use proptest::prelude::*;

fn deg(theta: f64) -> IncidenceGeometry {
    IncidenceGeometry::from_degrees(theta).unwrap()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[test]
fn passivity_on_dense_grid() {
    let base = KretschmannStack::reference(1.333).unwrap();
    for n in linspace(1.333, 1.4422, 221) {
        let stack = base.with_analyte(n).unwrap();
        for i in 1..900 {
            let r = reflection_coefficient(&stack, deg(i as f64 * 0.1)).unwrap().reflectance();
            assert!((0.0..=1.0).contains(&r), "n={n} θ={} R={r}", i as f64 * 0.1);
        }
    }
}

fn arb_stack() -> impl Strategy<Value = KretschmannStack> {
    (
        1.4f64..1.9,
        -40.0f64..-2.0,
        0.01f64..6.0,
        0.0f64..120.0,
        0.6f64..0.99,
        450.0f64..1050.0,
    )
        .prop_map(|(np, re, im, d, frac, wl)| {
            let metal = MetalModel::Constant(ComplexPermittivity::new(re, im));
            KretschmannStack::new(np, metal, d, 1.0 + frac * (np - 1.0), wl).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(5))]

    #[test]
    fn airy_sum_matches_transfer_matrix(stack in arb_stack()) {
        let [e1, e2, e3] = stack.permittivities();
        let layers = [Layer::new(e1, 0.0), Layer::new(e2, stack.thickness_nm()), Layer::new(e3, 0.0)];
        for i in 1..=200 {
            let g = deg(89.9 * i as f64 / 201.0);
            let kx = fresnel::tangential_wavevector(&stack, g);
            let airy = reflection_coefficient(&stack, g).unwrap().r_sp;
            let tmm = transfer_matrix_reflection(&layers, kx, stack.wavelength_nm()).unwrap();
            prop_assert!((airy - tmm).norm() < 1e-10, "θ={} {airy} vs {tmm}", g.degrees());
        }
    }

    #[test]
    fn zero_thickness_is_bare_interface(stack in arb_stack(), theta in 1.0f64..89.0) {
        let bare = stack.with_thickness(0.0).unwrap();
        let g = deg(theta);
        let [e1, _, e3] = stack.permittivities();
        let kx = fresnel::tangential_wavevector(&stack, g);
        let wl = stack.wavelength_nm();
        let r13 = fresnel::interface_reflection(
            e1, e3, fresnel::wavevector_z(e1, kx, wl), fresnel::wavevector_z(e3, kx, wl),
        ).unwrap();
        let r = reflection_coefficient(&bare, g).unwrap().r_sp;
        prop_assert!((r - r13).norm() < 1e-12);
    }
}

#[test]
fn lossless_film_totally_reflects() {
    let metal = MetalModel::Constant(ComplexPermittivity::new(-20.0, 0.0));
    let stack = KretschmannStack::new(1.5107, metal, 50.0, 1.333, 810.0).unwrap();
    let crit = (1.333f64 / 1.5107).asin().to_degrees();
    for theta in linspace(crit + 0.5, 89.5, 50) {
        let r = reflection_coefficient(&stack, deg(theta)).unwrap().reflectance();
        assert!((r - 1.0).abs() < 1e-10, "θ={theta} R={r}");
    }
}

#[test]
fn resonance_angle_increases_with_analyte_index() {
    let mut previous = 0.0;
    for n in linspace(1.333, 1.4422, 23) {
        let stack = KretschmannStack::reference(n).unwrap();
        let crit = (n / stack.n_prism()).asin().to_degrees();
        let theta = resonance_angle(&stack, (crit + 0.05, 89.9), 1e-6).unwrap();
        assert!(theta > previous, "n={n}: {theta} after {previous}");
        previous = theta;
    }
}

#[test]
fn inflection_increases_with_angle() {
    let stack = KretschmannStack::reference(1.38).unwrap();
    let mut previous = 0.0;
    for theta in linspace(65.5, 83.5, 37) {
        let g = deg(theta);
        let n = inflection_index(&stack, g, (1.30, 1.50), 1e-7).unwrap();
        assert!(n < critical_index(&stack, g));
        assert!(n > previous, "θ={theta}: {n} after {previous}");
        previous = n;
    }
}

#[test]
fn user_table_feeds_the_stack() {
    let csv = "wavelength_nm,n,k\n800,0.15,4.9\n820,0.16,5.1\n";
    let table = plasmon_core::materials::load_dispersion(
        csv.as_bytes(),
        plasmon_core::materials::DispersionFormat::Csv,
        "two-point",
    )
    .unwrap();
    let eps = table.permittivity_at(810.0).unwrap();
    let stack = KretschmannStack::new(1.5107, MetalModel::Table(table), 50.0, 1.38, 810.0).unwrap();
    let [_, e2, _] = stack.permittivities();
    assert_eq!(Complex64::from(e2), Complex64::from(eps));
    let bundled = DispersionTable::bundled_gold();
    assert_ne!(bundled.permittivity_at(810.0).unwrap(), eps);
}
