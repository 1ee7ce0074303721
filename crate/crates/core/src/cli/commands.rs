use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::RunConfig;
use super::report::{
    BetaStarPayload, CylinderValue, KmsCheckPayload, KmsPairRecord, KmsPayload, Metric, Payload,
    ReportDocument, SpectrumPayload, SuiteResult, ValidatePayload,
};
use super::{AppError, Command};
use crate::ck_algebra::{
    kms_condition_check, kms_state, random_monomial, CkElement, CuntzKrieger, CylinderMeasure,
    Monomial,
};
use crate::potential::{holder_diagnostic, range_and_positivity};
use crate::shift_space::{count_cylinders, enumerate_cylinders, primitivity, Word};
use crate::thermo::{ThermoModel, DEFAULT_BISECTION_MAX_ITER};
use crate::transfer_op::{
    algebra_identity_suite, index_identity_error, lambda_by_iterate_norm, restart_spread,
    rpf_convergence_report, PerronData, TransferMatrix,
};

/// Sweeps used for the RPF deviation and the iterate-norm oracle.
const RPF_SWEEPS: usize = 60;
const RPF_TOL: f64 = 1e-6;
const RPF_TRANSIENT: usize = 10;
/// Absolute allowance for round-off when testing monotone decay.
const MONOTONE_SLACK: f64 = 1e-12;
const RESTARTS: usize = 20;
const RESTART_TOL: f64 = 1e-8;
const IDENTITY_TOL: f64 = 1e-12;
const IDENTITY_TRIALS: usize = 100;
const KMS_TOL: f64 = 1e-7;
const KMS_CONTROL_SHIFT: f64 = 0.2;
const KMS_CONTROL_MARGIN: f64 = 1e-3;
const KMS_WORD_LEN: usize = 4;
const ADDITIVITY_TOL: f64 = 1e-10;
const AGGREGATION_TOL: f64 = 1e-8;
const CALCULUS_SAMPLES: usize = 100;
const BOUNDS_GRID: usize = 20;

pub fn run(command: &Command, cfg: &RunConfig) -> Result<ReportDocument, AppError> {
    let (payload, suites) = match command {
        Command::Validate => (Payload::Validate(validate(cfg)?), Vec::new()),
        Command::Spectrum { beta } => (Payload::Spectrum(spectrum(cfg, *beta)?), Vec::new()),
        Command::Curve { from, to, steps } => {
            if *steps == 0 || !(to > from) {
                return Err(AppError::Config(
                    "curve needs --steps ≥ 1 and --to > --from".into(),
                ));
            }
            let grid: Vec<f64> = (0..=*steps)
                .map(|i| from + (to - from) * i as f64 / *steps as f64)
                .collect();
            (Payload::Curve(model(cfg)?.lambda_curve(&grid)?), Vec::new())
        }
        Command::BetaStar => {
            let r = model(cfg)?.beta_star(DEFAULT_BISECTION_MAX_ITER)?;
            (
                Payload::BetaStar(BetaStarPayload {
                    beta_star: r.beta_star,
                    lambda_at: r.lambda_at,
                    bracket: r.bracket,
                    iterations: r.iterations,
                    depth_used: r.depth_used,
                }),
                Vec::new(),
            )
        }
        Command::Kms { monomial } => (Payload::Kms(kms_value(cfg, monomial)?), Vec::new()),
        Command::KmsCheck { pairs } => {
            let (payload, suite) = kms_check(cfg, *pairs)?;
            (Payload::KmsCheck(payload), vec![suite])
        }
        Command::Check => (Payload::Check, check(cfg)?),
    };
    Ok(ReportDocument {
        command: command.echo(),
        config_hash: cfg.hash(),
        payload,
        suites,
        timing: None,
    })
}

fn model(cfg: &RunConfig) -> Result<ThermoModel, AppError> {
    Ok(ThermoModel::new(
        &cfg.matrix,
        &cfg.h,
        cfg.k(),
        cfg.perron_options(),
    )?)
}

fn validate(cfg: &RunConfig) -> Result<ValidatePayload, AppError> {
    let prim = primitivity(&cfg.matrix);
    let range = range_and_positivity(&cfg.h);
    let holder = match &cfg.expr {
        Some(e) => Some(
            holder_diagnostic(e, &cfg.matrix, cfg.raw.metric_theta, 4)
                .map_err(|e| AppError::Config(e.to_string()))?,
        ),
        None => None,
    };
    Ok(ValidatePayload {
        matrix: cfg.matrix.row_strings(),
        n: cfg.matrix.n(),
        primitive: prim.exponent().is_some(),
        primitivity_exponent: prim.exponent(),
        depth: cfg.k(),
        cylinders: enumerate_cylinders(&cfg.matrix, cfg.k())?.len(),
        potential_depth: cfg.h.depth(),
        h_min: range.min,
        h_max: range.max,
        h_exceeds_one: range.exceeds_one,
        holder_exponent: holder.as_ref().map(|h| h.exponent),
        holder_constant: holder.as_ref().map(|h| h.constant),
    })
}

fn cylinder_values(m: &TransferMatrix, v: &[f64]) -> Vec<CylinderValue> {
    m.space()
        .words()
        .iter()
        .zip(v)
        .map(|(w, &value)| CylinderValue {
            word: w.to_string(),
            value,
        })
        .collect()
}

fn spectrum(cfg: &RunConfig, beta: f64) -> Result<SpectrumPayload, AppError> {
    let model = model(cfg)?;
    let m = model.transfer_matrix(beta)?;
    let p = model.perron_at(beta)?;
    let devs = rpf_convergence_report(&m, &p, &vec![1.0; m.dim()], RPF_SWEEPS)?;
    let rpf_tail = devs
        .iter()
        .enumerate()
        .skip(RPF_SWEEPS - RPF_TRANSIENT)
        .map(|(i, &d)| (i + 1, d))
        .collect();
    Ok(SpectrumPayload {
        beta,
        depth: m.depth(),
        dimension: m.dim(),
        lambda: p.lambda,
        residual_right: p.residual_right,
        residual_left: p.residual_left,
        iterations: p.iterations,
        h: cylinder_values(&m, &p.h),
        nu: cylinder_values(&m, &p.nu),
        rpf_tail,
    })
}

fn parse_monomial(cfg: &RunConfig, text: &str) -> Result<Monomial, AppError> {
    let m: Monomial = text.parse()?;
    for w in [&m.left, &m.right] {
        if let Some(&s) = w
            .symbols()
            .iter()
            .find(|&&s| s == 0 || s as usize > cfg.matrix.n())
        {
            return Err(AppError::Config(format!(
                "symbol {s} outside alphabet 1..={}",
                cfg.matrix.n()
            )));
        }
    }
    Ok(m)
}

fn kms_value(cfg: &RunConfig, text: &str) -> Result<KmsPayload, AppError> {
    let mono = parse_monomial(cfg, text)?;
    let model = model(cfg)?;
    let b = model.beta_star(DEFAULT_BISECTION_MAX_ITER)?.beta_star;
    let measure = CylinderMeasure::at_beta(&model, b)?;
    let ck = CuntzKrieger::new(&cfg.matrix);
    let value = kms_state(
        &measure,
        &ck.monomial(mono.left.clone(), mono.right.clone()),
    );
    Ok(KmsPayload {
        monomial: mono.to_string(),
        beta_star: b,
        re: value.re,
        im: value.im,
    })
}

fn unit_element(ck: &CuntzKrieger, m: Monomial) -> CkElement {
    ck.from_terms([(m, Complex64::new(1.0, 0.0))])
}

/// KMS margins on `pairs` seeded random monomial pairs.
fn kms_margins(
    ck: &CuntzKrieger,
    cfg: &RunConfig,
    measure: &CylinderMeasure,
    beta: f64,
    pairs: usize,
    seed: u64,
) -> Vec<KmsPairRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..pairs)
        .map(|_| {
            let a = random_monomial(ck, &mut rng, KMS_WORD_LEN);
            let b = random_monomial(ck, &mut rng, KMS_WORD_LEN);
            let r = kms_condition_check(
                ck,
                measure,
                &cfg.h,
                beta,
                &unit_element(ck, a.clone()),
                &unit_element(ck, b.clone()),
                KMS_TOL,
            );
            KmsPairRecord {
                a: a.to_string(),
                b: b.to_string(),
                delta: r.delta,
            }
        })
        .collect()
}

fn kms_check(cfg: &RunConfig, pairs: usize) -> Result<(KmsCheckPayload, SuiteResult), AppError> {
    let model = model(cfg)?;
    let b = model.beta_star(DEFAULT_BISECTION_MAX_ITER)?.beta_star;
    let measure = CylinderMeasure::at_beta(&model, b)?;
    let ck = CuntzKrieger::new(&cfg.matrix);
    let records = kms_margins(&ck, cfg, &measure, b, pairs, cfg.seed());
    let max_delta = records.iter().fold(0.0f64, |m, r| m.max(r.delta));
    let suite = SuiteResult::from_metrics(
        "kms",
        vec![Metric::at_most("max_margin", max_delta, KMS_TOL)],
    );
    Ok((
        KmsCheckPayload {
            beta_star: b,
            tol: KMS_TOL,
            max_delta,
            pairs: records,
        },
        suite,
    ))
}

fn check(cfg: &RunConfig) -> Result<Vec<SuiteResult>, AppError> {
    let model = model(cfg)?;
    let b = model.beta_star(DEFAULT_BISECTION_MAX_ITER)?;
    Ok(vec![
        shift_suite(cfg),
        perron_suite(cfg, &model)?,
        thermo_suite(cfg, &model, b.beta_star, b.lambda_at)?,
        algebra_suite(cfg, b.beta_star)?,
        measure_suite(cfg, &model, b.beta_star)?,
        calculus_suite(cfg),
        kms_suite(cfg, &model, b.beta_star)?,
    ])
}

fn shift_suite(cfg: &RunConfig) -> SuiteResult {
    let a = &cfg.matrix;
    let mut metrics = vec![Metric::flag(
        "primitive",
        primitivity(a).exponent().is_some(),
    )];
    let counts_agree = (1..=cfg.k())
        .all(|d| enumerate_cylinders(a, d).is_ok_and(|s| s.len() as u128 == count_cylinders(a, d)));
    metrics.push(Metric::flag("cylinder_counts", counts_agree));
    let sorted =
        enumerate_cylinders(a, cfg.k()).is_ok_and(|s| s.words().windows(2).all(|w| w[0] < w[1]));
    metrics.push(Metric::flag("lexicographic_order", sorted));
    SuiteResult::from_metrics("shift_space", metrics)
}

/// `λ ≤ ‖M^k 1‖_∞^{1/k} ≤ λ (max h / min h)^{1/k}` for a positive `h`.
fn oracle_bracket(p: &PerronData, oracle: f64) -> bool {
    let hmax = p.h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let hmin = p.h.iter().copied().fold(f64::INFINITY, f64::min);
    let upper = p.lambda * (hmax / hmin).powf(1.0 / RPF_SWEEPS as f64);
    let slack = 1e-12 * p.lambda;
    oracle >= p.lambda - slack && oracle <= upper + slack
}

/// Worst `dev_60` over seeded random `g ≥ 0`, and whether every sequence
/// is non-increasing after the transient.
pub fn rpf_summary(
    m: &TransferMatrix,
    p: &PerronData,
    samples: usize,
    seed: u64,
) -> Result<(f64, bool), AppError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut monotone = true;
    for _ in 0..samples {
        let g: Vec<f64> = (0..m.dim()).map(|_| rng.random::<f64>()).collect();
        let devs = rpf_convergence_report(m, p, &g, RPF_SWEEPS)?;
        worst = worst.max(devs[RPF_SWEEPS - 1]);
        monotone &= devs[RPF_TRANSIENT..]
            .windows(2)
            .all(|w| w[1] <= w[0] + MONOTONE_SLACK);
    }
    Ok((worst, monotone))
}

fn perron_suite(cfg: &RunConfig, model: &ThermoModel) -> Result<SuiteResult, AppError> {
    let m = model.transfer_matrix(0.0)?;
    let p = model.perron_at(0.0)?;
    let tol = cfg.raw.computation.tol;
    let oracle = lambda_by_iterate_norm(&m, RPF_SWEEPS);
    let (worst, monotone) = rpf_summary(&m, &p, 10, cfg.seed())?;
    let spread = restart_spread(&m, &cfg.perron_options(), RESTARTS)?;
    Ok(SuiteResult::from_metrics(
        "perron",
        vec![
            Metric::at_most("residual_right", p.residual_right, 10.0 * tol),
            Metric::at_most("residual_left", p.residual_left, 10.0 * tol),
            Metric::flag("iterate_norm_bracket", oracle_bracket(&p, oracle)),
            Metric::at_most("rpf_deviation", worst, RPF_TOL),
            Metric::flag("rpf_monotone_after_transient", monotone),
            Metric::at_most("restart_spread", spread, RESTART_TOL),
        ],
    ))
}

fn thermo_suite(
    cfg: &RunConfig,
    model: &ThermoModel,
    beta_star: f64,
    lambda_at: f64,
) -> Result<SuiteResult, AppError> {
    let lambda0 = model.lambda(0.0)?;
    let mut metrics = vec![Metric::at_most(
        "beta_star_residual",
        (lambda_at - 1.0).abs(),
        cfg.raw.computation.tol,
    )];
    if cfg.matrix.n() > 1 {
        metrics.push(Metric::flag("lambda_at_zero_exceeds_one", lambda0 > 1.0));
    }
    let top = (2.0 * beta_star).max(1.0);
    let delta = top / (4 * BOUNDS_GRID) as f64;
    let grid: Vec<f64> = (0..BOUNDS_GRID)
        .map(|i| delta + (top - delta) * i as f64 / (BOUNDS_GRID - 1) as f64)
        .collect();
    let mut worst = f64::INFINITY;
    for &beta in &grid {
        match model.bounds_report(beta, delta) {
            Ok(r) => worst = r.checks.iter().fold(worst, |w, c| w.min(c.margin)),
            Err(e) => return Ok(SuiteResult::errored("thermo", metrics, e.to_string())),
        }
    }
    metrics.push(Metric::at_least(
        "min_bound_margin",
        worst,
        -crate::thermo::INEQUALITY_SLACK,
    ));
    let strictly_decreasing = cfg.matrix.n() == 1 || model.lambda_curve(&grid).is_ok();
    metrics.push(Metric::flag("strictly_decreasing", strictly_decreasing));
    Ok(SuiteResult::from_metrics("thermo", metrics))
}

fn algebra_suite(cfg: &RunConfig, beta_star: f64) -> Result<SuiteResult, AppError> {
    let k = cfg.k().max(2);
    let report = algebra_identity_suite(&cfg.matrix, k, IDENTITY_TRIALS, IDENTITY_TOL, cfg.seed())?;
    let mut metrics: Vec<Metric> = report
        .checks
        .iter()
        .map(|c| Metric::at_most(c.name.clone(), c.max_error, IDENTITY_TOL))
        .collect();
    let index = index_identity_error(
        &cfg.matrix,
        &cfg.h,
        beta_star,
        k.max(cfg.h.depth()),
        IDENTITY_TRIALS,
        cfg.seed(),
    )?;
    metrics.push(Metric::at_most("index_equals_q_shift", index, IDENTITY_TOL));
    Ok(SuiteResult::from_metrics("algebra", metrics))
}

fn measure_suite(
    cfg: &RunConfig,
    model: &ThermoModel,
    beta_star: f64,
) -> Result<SuiteResult, AppError> {
    let a = &cfg.matrix;
    let measure = CylinderMeasure::at_beta(model, beta_star)?;
    let mut additivity = 0.0f64;
    let mut words = vec![Word::empty()];
    for _ in 0..cfg.k() + 3 {
        let mut next = Vec::new();
        for w in &words {
            let children: f64 = a.symbols().map(|j| measure.measure(&w.pushed(j))).sum();
            additivity = additivity.max((measure.measure(w) - children).abs());
            next.extend(
                a.symbols()
                    .map(|j| w.pushed(j))
                    .filter(|c| a.is_admissible(c)),
            );
        }
        words = next;
    }
    let finer = ThermoModel::new(a, &cfg.h, cfg.k() + 1, cfg.perron_options())?;
    let fine = CylinderMeasure::at_beta(&finer, beta_star)?;
    let space = enumerate_cylinders(a, cfg.k())?;
    let aggregation = space
        .words()
        .iter()
        .zip(measure.base_masses())
        .fold(0.0f64, |m, (w, &v)| m.max((fine.measure(w) - v).abs()));
    Ok(SuiteResult::from_metrics(
        "measure",
        vec![
            Metric::at_most("cylinder_additivity", additivity, ADDITIVITY_TOL),
            Metric::at_most("depth_aggregation", aggregation, AGGREGATION_TOL),
        ],
    ))
}

/// A random element with small Gaussian-integer coefficients, so that
/// products and sums are exact in floating point.
pub fn random_element<R: Rng + ?Sized>(
    ck: &CuntzKrieger,
    rng: &mut R,
    terms: usize,
    max_len: usize,
) -> CkElement {
    let parts: Vec<(Monomial, Complex64)> = (0..terms)
        .map(|_| {
            let c = Complex64::new(
                rng.random_range(-2..=2) as f64,
                rng.random_range(-2..=2) as f64,
            );
            (random_monomial(ck, rng, max_len), c)
        })
        .collect();
    ck.from_terms(parts)
}

fn calculus_suite(cfg: &RunConfig) -> SuiteResult {
    let ck = CuntzKrieger::new(&cfg.matrix);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    let (mut assoc, mut invol, mut anti) = (true, true, true);
    for _ in 0..CALCULUS_SAMPLES {
        let x = random_element(&ck, &mut rng, 2, 3);
        let y = random_element(&ck, &mut rng, 2, 3);
        let z = random_element(&ck, &mut rng, 2, 3);
        let xy = ck.multiply(&x, &y);
        assoc &= ck.multiply(&xy, &z) == ck.multiply(&x, &ck.multiply(&y, &z));
        invol &= x.adjoint().adjoint() == x;
        anti &= xy.adjoint() == ck.multiply(&y.adjoint(), &x.adjoint());
    }
    SuiteResult::from_metrics(
        "word_calculus",
        vec![
            Metric::flag("associativity", assoc),
            Metric::flag("involution", invol),
            Metric::flag("adjoint_reverses_products", anti),
        ],
    )
}

fn kms_suite(
    cfg: &RunConfig,
    model: &ThermoModel,
    beta_star: f64,
) -> Result<SuiteResult, AppError> {
    let ck = CuntzKrieger::new(&cfg.matrix);
    let measure = CylinderMeasure::at_beta(model, beta_star)?;
    let records = kms_margins(&ck, cfg, &measure, beta_star, 200, cfg.seed());
    let max_delta = records.iter().fold(0.0f64, |m, r| m.max(r.delta));
    let mut metrics = vec![
        Metric::flag(
            "psi_unit_is_one",
            kms_state(&measure, &ck.unit()) == Complex64::new(1.0, 0.0),
        ),
        Metric::at_most("max_margin", max_delta, KMS_TOL),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    let mut off_diagonal_zero = true;
    for _ in 0..CALCULUS_SAMPLES {
        let m = random_monomial(&ck, &mut rng, KMS_WORD_LEN);
        if !m.is_diagonal() {
            let v = kms_state(&measure, &ck.monomial(m.left, m.right));
            off_diagonal_zero &= v == Complex64::new(0.0, 0.0);
        }
    }
    metrics.push(Metric::flag("psi_off_diagonal_is_zero", off_diagonal_zero));
    if cfg.matrix.n() > 1 {
        let shifted = beta_star + KMS_CONTROL_SHIFT;
        let off = CylinderMeasure::at_beta(model, shifted)?;
        let control = kms_margins(&ck, cfg, &off, shifted, 200, cfg.seed());
        let control_max = control.iter().fold(0.0f64, |m, r| m.max(r.delta));
        metrics.push(Metric::at_least(
            "negative_control_margin",
            control_max,
            KMS_CONTROL_MARGIN,
        ));
    }
    Ok(SuiteResult::from_metrics("kms", metrics))
}
