use omx_core::correlators::{gamma_corr, SymMatrix};
use omx_core::gaussian::{
    commutator, ordered_exp_expectation, second_moment, GaussianState, Insertion, LinearForm, Noise, Sector,
};
use omx_core::oracle::CMatrix;
use omx_core::params::TimeGrid;
use omx_core::C64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn kernels(grid: &TimeGrid, kappa: f64, gamma: f64) -> (SymMatrix, SymMatrix) {
    let t = grid.t_end;
    let nodes = &grid.nodes;
    let n = grid.len();
    (
        SymMatrix::from_fn(n, |i, j| gamma_corr(nodes[i], nodes[j], t, gamma)),
        SymMatrix::from_fn(n, |i, j| gamma_corr(nodes[i], nodes[j], t, kappa)),
    )
}

fn mech_form(cx: C64, cp: C64) -> LinearForm {
    LinearForm::zero(0).with_x(cx).with_p(cp)
}

/// Truncated-Fock reference for mechanical-only forms.
struct Fock {
    x: CMatrix,
    p: CMatrix,
    rho: CMatrix,
}

impl Fock {
    fn new(dim: usize, n_th: f64) -> Self {
        let b = CMatrix::from_fn(dim, |i, j| if j == i + 1 { c((j as f64).sqrt(), 0.0) } else { c(0.0, 0.0) });
        let bd = b.dagger();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x = (&b + &bd).scale(c(s, 0.0));
        let p = (&b - &bd).scale(c(0.0, -s));
        let q = n_th / (n_th + 1.0);
        let rho = CMatrix::from_fn(dim, |i, j| if i == j { c((1.0 - q) * q.powi(i as i32), 0.0) } else { c(0.0, 0.0) });
        Fock { x, p, rho }
    }

    fn op(&self, f: &LinearForm) -> CMatrix {
        &self.x.scale(f.c_x()) + &self.p.scale(f.c_p())
    }

    /// Tr ρ · Π_k (insertion?) e^{L_k}, with insertions before their exponent index.
    fn expect(&self, exps: &[LinearForm], ins: &[Insertion]) -> C64 {
        let dim = self.x.dim();
        let mut prod = CMatrix::identity(dim);
        for k in 0..=exps.len() {
            for i in ins.iter().filter(|i| i.position == k) {
                prod = &prod * &self.op(&i.form);
            }
            if k < exps.len() {
                prod = &prod * &self.op(&exps[k]).expm();
            }
        }
        (&self.rho * &prod).trace()
    }
}

#[test]
fn vacuum_variance() {
    let st = GaussianState::mechanical_only(0.0);
    let a = mech_form(c(0.7, 0.2), c(0.0, 0.0));
    let b = mech_form(c(-1.1, 0.4), c(0.0, 0.0));
    let m = second_moment(&a, &b, &st).unwrap();
    assert!((m - 0.5 * a.c_x() * b.c_x()).norm() < 1e-15);
}

#[test]
fn cavity_noise_double_integral() {
    let grid = TimeGrid::with_steps(5.0, 500).unwrap();
    let (gm, gc) = kernels(&grid, 1.0, 0.01);
    let st = GaussianState::new(0.3, &gm, &gc).unwrap();
    let n = grid.len();
    let a = LinearForm::zero(n).integrate(Noise::Cav, &grid, 0, n - 1, |_| c(1.0, 0.0)).unwrap();
    let ad = LinearForm::zero(n).integrate(Noise::CavDag, &grid, 0, n - 1, |_| c(1.0, 0.0)).unwrap();
    let (t, h) = (5.0f64, 0.5f64);
    let e = (-h * t).exp();
    let exact = 2.0 * (t / h - (1.0 - e) / (h * h)) - ((1.0 - e) / h).powi(2);
    let v = second_moment(&a, &ad, &st).unwrap();
    assert!((v.re - exact).abs() < 1e-4 * exact && v.im.abs() < 1e-15, "{v} vs {exact}");
    assert_eq!(second_moment(&ad, &a, &st).unwrap(), c(0.0, 0.0));
}

#[test]
fn sectors_are_independent() {
    let grid = TimeGrid::with_steps(2.0, 20).unwrap();
    let (gm, gc) = kernels(&grid, 1.0, 0.2);
    let st = GaussianState::new(1.5, &gm, &gc).unwrap();
    let n = grid.len();
    let mech = LinearForm::zero(n)
        .with_x(c(0.3, 0.1))
        .integrate(Noise::MechDag, &grid, 0, n - 1, |k| c(k as f64, 1.0))
        .unwrap();
    let cav = LinearForm::zero(n).integrate(Noise::Cav, &grid, 0, n - 1, |k| c(1.0, k as f64)).unwrap();
    assert_eq!(mech.sector(), Sector::Mechanical);
    assert_eq!(cav.sector(), Sector::Cavity);
    assert_eq!(mech.add(&cav).unwrap().sector(), Sector::Mixed);
    assert_eq!(LinearForm::zero(n).sector(), Sector::Empty);
    assert_eq!(second_moment(&mech, &cav, &st).unwrap(), c(0.0, 0.0));
    assert_eq!(second_moment(&cav, &mech, &st).unwrap(), c(0.0, 0.0));
    // mismatched grids are rejected
    assert!(second_moment(&LinearForm::zero(3), &cav, &st).is_err());
}

#[test]
fn trivial_expectations() {
    let st = GaussianState::mechanical_only(0.4);
    let k = mech_form(c(1.0, 0.0), c(0.0, 2.0));
    let one = ordered_exp_expectation(&[], &[Insertion { position: 0, form: k.clone() }], &st).unwrap();
    assert_eq!(one, c(0.0, 0.0));
    let a = mech_form(c(0.0, 0.5), c(0.2, 0.0));
    let v = ordered_exp_expectation(std::slice::from_ref(&a), &[], &st).unwrap();
    let want = (0.5 * second_moment(&a, &a, &st).unwrap()).exp();
    assert!((v - want).norm() < 1e-15);
    let three = vec![Insertion { position: 0, form: k.clone() }; 3];
    assert!(ordered_exp_expectation(&[], &three, &st).is_err());
}

#[test]
fn displacement_pair_in_vacuum() {
    let fock = Fock::new(40, 0.0);
    let st = GaussianState::mechanical_only(0.0);
    for &(l, m) in &[(0.3, 0.8), (1.0, 1.0), (-0.6, 0.2)] {
        let a = mech_form(c(0.0, l), c(0.0, 0.0));
        let b = mech_form(c(0.0, m), c(0.0, 0.0));
        let v = ordered_exp_expectation(&[a.clone(), b.clone()], &[], &st).unwrap();
        let exact = (-(l + m) * (l + m) / 4.0).exp();
        assert!((v - c(exact, 0.0)).norm() < 1e-14);
        assert!((fock.expect(&[a, b], &[]) - c(exact, 0.0)).norm() < 1e-10);
    }
}

#[test]
fn matches_truncated_fock_products() {
    let exps = [
        mech_form(c(0.0, 0.6), c(0.0, -0.3)),
        mech_form(c(0.2, 0.1), c(-0.4, 0.5)),
        mech_form(c(0.0, -0.7), c(0.0, 0.9)),
    ];
    let k1 = mech_form(c(0.5, -0.2), c(0.1, 0.3));
    let k2 = mech_form(c(-0.3, 0.0), c(0.0, 0.8));
    let cases: Vec<Vec<Insertion>> = vec![
        vec![],
        vec![Insertion { position: 1, form: k1.clone() }],
        vec![Insertion { position: 0, form: k1.clone() }, Insertion { position: 2, form: k2.clone() }],
        vec![Insertion { position: 3, form: k2.clone() }, Insertion { position: 1, form: k1.clone() }],
    ];
    for n_th in [0.0, 0.5] {
        let fock = Fock::new(60, n_th);
        let st = GaussianState::mechanical_only(n_th);
        for ins in &cases {
            let want = fock.expect(&exps, ins);
            let got = ordered_exp_expectation(&exps, ins, &st).unwrap();
            assert!((got - want).norm() < 1e-6, "n_th {n_th}, {} insertions: {got} vs {want}", ins.len());
        }
    }
}

fn cplx() -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| c(a, b))
}

const NODES: usize = 6;

fn form() -> impl Strategy<Value = LinearForm> {
    (cplx(), cplx(), prop::collection::vec(cplx(), 4 * NODES)).prop_map(|(cx, cp, k)| {
        let part = |i: usize| k[i * NODES..(i + 1) * NODES].iter().map(|z| z * 0.1).collect::<Vec<_>>();
        LinearForm::zero(NODES)
            .with_x(cx)
            .with_p(cp)
            .with_noise(Noise::Mech, part(0))
            .and_then(|f| f.with_noise(Noise::MechDag, part(1)))
            .and_then(|f| f.with_noise(Noise::Cav, part(2)))
            .and_then(|f| f.with_noise(Noise::CavDag, part(3)))
            .unwrap()
    })
}

fn small_state() -> (SymMatrix, SymMatrix) {
    kernels(&TimeGrid::with_steps(3.0, NODES - 1).unwrap(), 1.0, 0.3)
}

proptest! {
    #[test]
    fn conjugation_is_an_involution(f in form()) {
        prop_assert_eq!(f.hermitian_conjugate().hermitian_conjugate(), f);
    }

    #[test]
    fn commutator_consistency(a in form(), b in form(), n_th in 0.0f64..3.0) {
        let (gm, gc) = small_state();
        let st = GaussianState::new(n_th, &gm, &gc).unwrap();
        let lhs = second_moment(&a, &b, &st).unwrap() - second_moment(&b, &a, &st).unwrap();
        let rhs = commutator(&a, &b, &st).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn reversal_conjugates(
        exps in prop::collection::vec(form(), 1..4),
        k1 in form(),
        k2 in form(),
        n_ins in 0usize..3,
        n_th in 0.0f64..2.0,
    ) {
        let (gm, gc) = small_state();
        let st = GaussianState::new(n_th, &gm, &gc).unwrap();
        let m = exps.len();
        // distinct positions: k1 in front, k2 at the back
        let ins: Vec<Insertion> = [(0, k1), (m, k2)]
            .into_iter()
            .take(n_ins)
            .map(|(position, form)| Insertion { position, form })
            .collect();
        let rev_exps: Vec<LinearForm> = exps.iter().rev().map(|f| f.hermitian_conjugate()).collect();
        let rev_ins: Vec<Insertion> = ins
            .iter()
            .map(|i| Insertion { position: m - i.position, form: i.form.hermitian_conjugate() })
            .collect();
        let a = ordered_exp_expectation(&exps, &ins, &st).unwrap();
        let b = ordered_exp_expectation(&rev_exps, &rev_ins, &st).unwrap();
        prop_assert!((a - b.conj()).norm() < 1e-10 * a.norm().max(1.0));
    }
}
