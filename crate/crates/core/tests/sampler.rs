use fuzzreg::approx::SNApprox;
use fuzzreg::dists::SkewNormalParams;
use fuzzreg::gibbs::{independence_mh_step, run_chains, SamplerConfig};
use fuzzreg::model::{simulate, Family, Link, ModelSpec, ThetaS, ThetaY};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn small_problem(seed: u64) -> (fuzzreg::model::FuzzyDataset, ModelSpec) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 80;
    let mut x = DMatrix::from_element(n, 2, 1.0);
    for i in 0..n {
        x[(i, 1)] = StandardNormal.sample(&mut rng);
    }
    let spec = ModelSpec::new(Family::Beta, Link::Logit, 0.0, 1.0, 2).unwrap();
    let data = simulate(
        &spec,
        &ThetaY::new(vec![0.2, -0.4], 2.5),
        &ThetaS::new(15.0, 5.0).unwrap(),
        &x,
        &mut rng,
    )
    .unwrap();
    (data, spec)
}

fn cfg(seed: u64) -> SamplerConfig {
    SamplerConfig {
        chains: 3,
        samples: 200,
        burnin: 100,
        seed,
        ..SamplerConfig::default()
    }
}

#[test]
fn deterministic_given_seed_and_independent_of_threading() {
    let (data, spec) = small_problem(1);
    let a = run_chains(&data, &spec, &cfg(5)).unwrap();
    let b = run_chains(
        &data,
        &spec,
        &SamplerConfig {
            parallel: false,
            ..cfg(5)
        },
    )
    .unwrap();
    assert_eq!(a, b);
    let c = run_chains(&data, &spec, &cfg(6)).unwrap();
    assert_ne!(a[0].theta, c[0].theta);
    // Chains use distinct streams.
    assert_ne!(a[0].theta, a[1].theta);
}

#[test]
fn chain_shapes_and_latent_storage() {
    let (data, spec) = small_problem(2);
    let chains = run_chains(&data, &spec, &cfg(1)).unwrap();
    assert_eq!(chains.len(), 3);
    for (k, c) in chains.iter().enumerate() {
        assert_eq!(c.chain_id, k);
        assert_eq!(c.theta.shape(), (200, 3));
        let y = c.y_latent.as_ref().unwrap();
        assert_eq!(y.shape(), (200, data.n()));
        assert!(y.iter().all(|v| *v > 0.0 && *v < 1.0));
        assert!(c.acceptance_rate().is_none());
    }
}

#[test]
fn mh_correction_records_acceptance() {
    let (data, spec) = small_problem(3);
    let chains = run_chains(
        &data,
        &spec,
        &SamplerConfig {
            mh_correct: true,
            ..cfg(2)
        },
    )
    .unwrap();
    for c in &chains {
        let r = c.acceptance_rate().unwrap();
        assert!(r > 0.0 && r <= 1.0, "{r}");
        assert_eq!(c.mh_proposed, 299);
    }
}

#[test]
fn perfect_proposal_is_always_accepted() {
    let params = SkewNormalParams::new(
        DVector::from_vec(vec![0.5, -1.0]),
        DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]),
        DVector::from_vec(vec![1.5, -0.7]),
    )
    .unwrap();
    let sn = SNApprox {
        mode: params.location().clone(),
        kappa: 0.0,
        log_det: 0.0,
        gaussian_fallback: false,
        params: params.clone(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut state = DVector::from_vec(vec![0.0, 0.0]);
    let mut accepted = 0;
    for _ in 0..2000 {
        let (next, ok) = independence_mh_step(&state, |t| params.logpdf(t) + 3.0, &sn, &mut rng);
        state = next;
        accepted += ok as usize;
    }
    assert_eq!(accepted, 2000);
}

#[test]
fn invalid_configuration_is_rejected() {
    let (data, spec) = small_problem(4);
    assert!(run_chains(&data, &spec, &SamplerConfig { chains: 0, ..cfg(1) }).is_err());
    assert!(run_chains(
        &data,
        &spec,
        &SamplerConfig {
            sn_refresh: 0,
            ..cfg(1)
        }
    )
    .is_err());
    let wrong = ModelSpec::new(Family::Beta, Link::Logit, 0.0, 1.0, 3).unwrap();
    assert!(run_chains(&data, &wrong, &cfg(1)).is_err());
}
