use mto_core::capacity::{self, CapacityOptions, OptimizerOptions, SimplexObjective, TinObjective};
use mto_core::channels::{
    self, catalog, effective_interference, lift_parallel, make_collision, AuxSpec, Carrier, Channel, CollisionKernel,
    DiscreteMto, GaussianMto, InterferenceLaw, ParallelMto, ProductDist,
};
use mto_core::infotheory::{extremal_gap_check, gaussian_sum_rate, JointPmf, Kernel, Pmf};
use mto_core::linalg::{self, c, column, real_scalar, CMatrix};
use mto_core::lp::{Cmp, LinearProgram};
use mto_core::regimes;
use mto_core::regions::{self, Polytope, REGION_TOL};
use mto_core::simulate::{self, TrialConfig};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn simplex(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -r.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn kernel(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> Kernel {
    Kernel::new((0..rows).map(|_| simplex(r, cols)).collect()).unwrap()
}

fn gain(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> Complex64 {
    Complex64::from_polar(r.random_range(lo..hi), r.random_range(0.0..std::f64::consts::TAU))
}

fn random_dist(r: &mut ChaCha8Rng, ch: &DiscreteMto) -> Vec<Pmf> {
    ch.inputs().iter().map(|&n| Pmf::from_probs(simplex(r, n)).unwrap()).collect()
}

/// Random deterministic channel whose interference is a function of the
/// interferers' outputs, so it lies in the noisy regime.
fn noisy_deterministic(r: &mut ChaCha8Rng) -> DiscreteMto {
    loop {
        let ch = catalog::random_deterministic(r, 3);
        if capacity::deterministic_q(&ch).unwrap().is_some() {
            return ch;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn entropy_chain_rule(seed in any::<u64>()) {
        let mut r = rng(seed);
        let shape: Vec<usize> = (0..3).map(|_| r.random_range(2..=3)).collect();
        let n: usize = shape.iter().product();
        let p = JointPmf::new(vec!["A".into(), "B".into(), "C".into()], shape, simplex(&mut r, n)).unwrap();
        let lhs = p.entropy_of(&["A", "B"]).unwrap();
        let rhs = p.entropy_of(&["A"]).unwrap() + p.conditional_entropy(&["B"], &["A"]).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10);
    }

    #[test]
    fn data_processing(seed in any::<u64>()) {
        let mut r = rng(seed);
        let na = r.random_range(2..=4);
        let nb = r.random_range(2..=4);
        let nc = r.random_range(2..=4);
        let a = simplex(&mut r, na);
        let (k1, k2) = (kernel(&mut r, na, nb), kernel(&mut r, nb, nc));
        let p = JointPmf::from_fn(&["A", "B", "C"], &[na, nb, nc], |i| a[i[0]] * k1.get(i[0], i[1]) * k2.get(i[1], i[2])).unwrap();
        let ac = p.mutual_information(&["A"], &["C"]).unwrap();
        let ab = p.mutual_information(&["A"], &["B"]).unwrap();
        prop_assert!(ac <= ab + 1e-10);
    }

    #[test]
    fn extremal_inequality_binary(seed in any::<u64>()) {
        let mut r = rng(seed);
        let law = JointPmf::new(vec!["A0".into(), "A1".into()], vec![2, 2], simplex(&mut r, 4)).unwrap();
        let g = extremal_gap_check(&law, &kernel(&mut r, 2, 2), &kernel(&mut r, 2, 2), 2).unwrap();
        prop_assert!(g.holds(), "{g:?}");
    }

    #[test]
    fn gaussian_rates_monotone_in_own_power(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = 3;
        let direct: Vec<Complex64> = (0..k).map(|_| gain(&mut r, 0.2, 2.0)).collect();
        let cross: Vec<Complex64> = (1..k).map(|_| gain(&mut r, 0.0, 2.0)).collect();
        let ch = GaussianMto::scalar(&direct, &cross, vec![1.0; k]).unwrap();
        let mut covs: Vec<CMatrix> = (0..k).map(|_| real_scalar(r.random_range(0.0..5.0))).collect();
        let before = gaussian_sum_rate(&ch.link_table(), &covs).unwrap();
        prop_assert!(before.per_user.iter().all(|&v| v >= 0.0));
        let user = r.random_range(1..k);
        covs[user] = &covs[user] + real_scalar(r.random_range(0.0..5.0));
        let after = gaussian_sum_rate(&ch.link_table(), &covs).unwrap();
        prop_assert!(after.per_user[user] >= before.per_user[user] - 1e-12);
    }

    #[test]
    fn collision_channels_validate(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = r.random_range(2..=4);
        let inputs: Vec<usize> = (0..k).map(|_| r.random_range(2..=3)).collect();
        let kernel = match r.random_range(0..3) {
            0 => CollisionKernel::Deterministic,
            1 => CollisionKernel::Constant(r.random_range(0.0..1.0)),
            _ => {
                let rows: usize = inputs[1..].iter().product();
                CollisionKernel::Table(Kernel::new((0..rows).map(|_| simplex(&mut r, 2)).collect()).unwrap())
            }
        };
        prop_assert!(make_collision(inputs, kernel).unwrap().validate().is_valid());
    }

    #[test]
    fn effective_interference_is_a_law(seed in any::<u64>()) {
        let mut r = rng(seed);
        let ch = catalog::random_deterministic(&mut r, 3);
        let d = random_dist(&mut r, &ch);
        match effective_interference(&Channel::Discrete(ch), &ProductDist::Discrete(d)).unwrap() {
            InterferenceLaw::Discrete(p) => prop_assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12),
            InterferenceLaw::Gaussian(_) => prop_assert!(false),
        }
        let direct: Vec<Complex64> = (0..3).map(|_| gain(&mut r, 0.2, 2.0)).collect();
        let cross: Vec<Complex64> = (1..3).map(|_| gain(&mut r, 0.0, 2.0)).collect();
        let g = GaussianMto::scalar(&direct, &cross, vec![1.0; 3]).unwrap();
        let covs: Vec<CMatrix> = (0..3).map(|_| real_scalar(r.random_range(0.0..5.0))).collect();
        match effective_interference(&Channel::Gaussian(g), &ProductDist::Gaussian(covs)).unwrap() {
            InterferenceLaw::Gaussian(law) => prop_assert!(linalg::min_eigenvalue(&law.covariance) >= 1.0 - 1e-12),
            InterferenceLaw::Discrete(_) => prop_assert!(false),
        }
    }

    #[test]
    fn lifting_preserves_users_and_invertibility(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = r.random_range(2..=3);
        let carriers: Vec<Carrier> = (0..2).map(|_| Carrier::Discrete(catalog::random_deterministic(&mut r, k))).collect();
        let p = ParallelMto::new(carriers, None).unwrap();
        match lift_parallel(&p).unwrap() {
            Carrier::Discrete(d) => {
                prop_assert_eq!(d.num_users(), k);
                prop_assert!(d.validate().is_valid());
            }
            Carrier::Gaussian(_) => prop_assert!(false),
        }
    }

    #[test]
    fn degradedness_survives_post_composition(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (py, a) = (r.random_range(0.0..0.5), r.random_range(0.0..0.5));
        let pv = py * (1.0 - a) + a * (1.0 - py);
        let base = catalog::bsc_interference(2, py, pv);
        prop_assert!(regimes::degraded_lp(&base).unwrap().verdict);
        let nv = r.random_range(2..=3);
        let m = kernel(&mut r, 2, nv);
        let composed = DiscreteMto::new(
            vec![2, 2],
            2 * nv,
            base.direct_kernels().to_vec(),
            base.interference().then(&m).unwrap(),
            (0..2).map(|x| (0..nv).map(|v| x * nv + v).collect()).collect(),
        ).unwrap();
        prop_assert!(regimes::degraded_lp(&composed).unwrap().verdict);
    }

    #[test]
    fn analytic_checks_are_scale_covariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = r.random_range(2..=4);
        let direct: Vec<Complex64> = (1..k).map(|_| gain(&mut r, 0.2, 2.0)).collect();
        let cross: Vec<Complex64> = (1..k).map(|_| gain(&mut r, 0.0, 1.5)).collect();
        let s = gain(&mut r, 0.1, 10.0);
        let sd: Vec<Complex64> = direct.iter().map(|d| d * s).collect();
        let sc: Vec<Complex64> = cross.iter().map(|x| x * s).collect();
        let v = regimes::check_eq1_siso(&cross, &direct).unwrap().verdict;
        prop_assert_eq!(v, regimes::check_eq1_siso(&sc, &sd).unwrap().verdict);

        let mut d0 = vec![c(1.0, 0.0)];
        d0.extend(&direct);
        let mut sd0 = vec![c(1.0, 0.0)];
        sd0.extend(&sd);
        let a = regimes::check_corollary1_auto(&GaussianMto::scalar(&d0, &cross, vec![1.0; k]).unwrap()).unwrap();
        let b = regimes::check_corollary1_auto(&GaussianMto::scalar(&sd0, &sc, vec![1.0; k]).unwrap()).unwrap();
        prop_assert_eq!(a.verdict, b.verdict);
        prop_assert_eq!(a.verdict, v);

        let col = |g: &[Complex64]| -> Vec<CMatrix> { g.iter().map(|x| column(&[*x, *x * 0.5])).collect() };
        prop_assert_eq!(
            regimes::check_simo(&col(&cross), &col(&direct)).unwrap().verdict,
            regimes::check_simo(&col(&sc), &col(&sd)).unwrap().verdict
        );
        let diag = |g: &[Complex64]| -> Vec<Vec<Complex64>> { g.iter().map(|x| vec![*x, *x * 2.0]).collect() };
        prop_assert_eq!(
            regimes::check_mimo_diag(&diag(&direct), &diag(&cross)).unwrap().verdict,
            regimes::check_mimo_diag(&diag(&sd), &diag(&sc)).unwrap().verdict
        );
        let sig_c: Vec<f64> = cross.iter().map(|x| x.norm()).collect();
        let sig_d: Vec<f64> = direct.iter().map(|x| x.norm()).collect();
        let m = s.norm();
        prop_assert_eq!(
            regimes::check_fading(&sig_c, &sig_d).unwrap().verdict,
            regimes::check_fading(
                &sig_c.iter().map(|x| x * m).collect::<Vec<_>>(),
                &sig_d.iter().map(|x| x * m).collect::<Vec<_>>()
            ).unwrap().verdict
        );
    }

    #[test]
    fn fourier_motzkin_is_an_exact_projection(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut p = Polytope::new(vec!["x".into(), "y".into(), "z".into()]);
        for j in 0..3 {
            let mut e = vec![0.0; 3];
            e[j] = 1.0;
            p.push(e.clone(), 1.0, "").unwrap();
            e[j] = -1.0;
            p.push(e, 1.0, "").unwrap();
        }
        for _ in 0..4 {
            let a: Vec<f64> = (0..3).map(|_| r.random_range(-1.0..1.0)).collect();
            p.push(a, r.random_range(0.1..1.0), "").unwrap();
        }
        let q = p.fourier_motzkin("z").unwrap();
        for _ in 0..20 {
            let pt = [r.random_range(-1.2..1.2), r.random_range(-1.2..1.2)];
            let mut lp = LinearProgram::new(1);
            for row in p.rows() {
                lp.constraint(vec![(0, row.coeffs[2])], Cmp::Le, row.bound - row.coeffs[0] * pt[0] - row.coeffs[1] * pt[1]);
            }
            let liftable = lp.feasible_point().unwrap().is_some();
            let inside = q.contains_point(&pt, 0.0);
            // points within 1e-9 of the boundary may go either way
            let margin = q.rows().iter().map(|row| row.bound - row.coeffs[0] * pt[0] - row.coeffs[1] * pt[1]).fold(f64::INFINITY, f64::min);
            if margin.abs() > 1e-9 {
                prop_assert_eq!(liftable, inside);
            }
        }
    }

    #[test]
    fn inner_inside_outer_and_parametric_equal(seed in any::<u64>()) {
        let mut r = rng(seed);
        let ch = catalog::random_deterministic(&mut r, 3);
        let d = random_dist(&mut r, &ch);
        let aux = AuxSpec::trivial(&ch);
        let inner = regions::inner_region(&ch, &d, &aux).unwrap();
        let outer = regions::outer_region(&ch, &d, &aux).unwrap();
        prop_assert!(inner.is_subset_of(&outer, REGION_TOL).unwrap());
        let param = regions::inner_region_parametric(&ch, &d, &aux).unwrap();
        prop_assert!(param.equivalent(&inner, REGION_TOL).unwrap());
        let all: Vec<usize> = (1..3).collect();
        prop_assert!(regions::alignment_gain(&ch, &d, &aux, &all).unwrap() >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn deterministic_and_discrete_optimizers_agree(seed in any::<u64>()) {
        let mut r = rng(seed);
        let ch = noisy_deterministic(&mut r);
        let opts = CapacityOptions { optimizer: OptimizerOptions { restarts: 4, seed, ..OptimizerOptions::default() }, ..CapacityOptions::default() };
        let a = capacity::sum_capacity_discrete(&ch, &opts).unwrap();
        let b = capacity::sum_capacity_deterministic(&ch, &opts).unwrap();
        prop_assert!((a.bits - b.bits).abs() <= 1e-6, "{} vs {}", a.bits, b.bits);

        let capacity::ArgMax::Pmfs(p) = &b.argmax else { unreachable!() };
        let argmax: Vec<Pmf> = p.iter().map(|v| Pmf::normalized(v).unwrap()).collect();
        let outer = regions::outer_region(&ch, &argmax, &AuxSpec::trivial(&ch)).unwrap();
        let sum = outer.max_linear(&[1.0; 3]).unwrap().unwrap();
        prop_assert!((sum - b.bits).abs() <= 1e-9, "{sum} vs {}", b.bits);
    }

    #[test]
    fn gaussian_capacity_grows_with_power(seed in any::<u64>()) {
        let mut r = rng(seed);
        let direct = [gain(&mut r, 0.3, 2.0), gain(&mut r, 0.3, 2.0)];
        let cross = [gain(&mut r, 0.0, direct[1].norm())];
        let powers = vec![r.random_range(0.1..5.0), r.random_range(0.1..5.0)];
        let ch = GaussianMto::scalar(&direct, &cross, powers.clone()).unwrap();
        let opts = CapacityOptions { optimizer: OptimizerOptions { restarts: 2, ..OptimizerOptions::default() }, ..CapacityOptions::default() };
        let base = capacity::sum_capacity_gaussian(&ch, &opts).unwrap().bits;
        for user in 0..2 {
            let mut more = powers.clone();
            more[user] += r.random_range(0.0..3.0);
            let grown = capacity::sum_capacity_gaussian(&ch.with_powers(more).unwrap(), &opts).unwrap().bits;
            prop_assert!(grown >= base - 1e-9);
        }
    }

    #[test]
    fn separable_beats_correlated_inputs(seed in any::<u64>()) {
        let mut r = rng(seed);
        let carriers = vec![Carrier::Discrete(noisy_deterministic(&mut r)), Carrier::Discrete(noisy_deterministic(&mut r))];
        let p = ParallelMto::new(carriers, None).unwrap();
        let sep = capacity::sum_capacity_parallel(&p, &CapacityOptions::default()).unwrap().bits;
        let Carrier::Discrete(lifted) = lift_parallel(&p).unwrap() else { unreachable!() };
        let obj = TinObjective { ch: &lifted, scale: 1.0 };
        for _ in 0..50 {
            let law: Vec<Vec<f64>> = lifted.inputs().iter().map(|&n| simplex(&mut r, n)).collect();
            prop_assert!(obj.value(&law) <= sep + 1e-9);
        }
    }

    #[test]
    fn simulation_is_seed_deterministic(seed in any::<u64>()) {
        let mut cfg = TrialConfig::new(vec![0.6, 0.5, 0.5], vec![6, 8], 64);
        cfg.seed = seed;
        let a = simulate::sweep_blocklength(&catalog::xor(), &cfg).unwrap();
        let b = simulate::sweep_blocklength(&catalog::xor(), &cfg).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn null_channel_errors_approach_one() {
    // receiver 1 sees only the interferer: Y_1 = V = X_2
    let ch = DiscreteMto::new(vec![2, 2], 2, vec![Kernel::identity(2)], Kernel::identity(2), vec![vec![0, 1], vec![0, 1]]).unwrap();
    let mut cfg = TrialConfig::new(vec![0.5, 0.0], vec![4, 8, 12], 400);
    cfg.seed = 11;
    let curve = simulate::sweep_blocklength(&ch, &cfg).unwrap();
    assert!(curve.windows(2).all(|w| w[1].p_hat >= w[0].p_hat), "{curve:?}");
    assert!(curve.last().unwrap().p_hat > 0.95, "{curve:?}");
}

#[test]
fn spec_round_trip_builds_the_same_channel() {
    let spec = channels::spec::ChannelSpec::from_discrete(&catalog::xor());
    let json = serde_json::to_string(&spec).unwrap();
    let back: channels::spec::ChannelSpec = serde_json::from_str(&json).unwrap();
    assert!(matches!(back.build().unwrap(), Channel::Discrete(d) if d == catalog::xor()));
}
