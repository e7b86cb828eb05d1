use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use ganprior::correction::correct_rows;
use ganprior::evaluation::{
    fid_tradeoff as run_tradeoff, interpolation_experiment, lambda_sweep as run_sweep,
    pc_magnitude_profile, reconstruction_experiment, write_curve_csv, Condition, ExperimentReport,
    InterpolationSetup, ReconstructionSetup, TargetSource, TradeoffSetup,
};
use ganprior::inversion::{invert as run_inversion, TargetSpace};
use ganprior::io::{read_images, read_latents, value_range, write_images, write_latents, write_ppm, ImageShape};
use ganprior::latent::{lru_in_place, V_SLOPE};
use ganprior::{CorrectionConfig, GaussianModel, GeneratorBundle, Matrix, StyleStack};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::*;
use crate::manifest::{Manifest, Run};
use crate::CliError;

type Bundle = GeneratorBundle<f64>;
type Model = GaussianModel<f64>;

fn open(path: &Path, what: &str) -> Result<BufReader<File>, CliError> {
    require_path(path, what)?;
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Usage(format!("cannot open {what} {}: {e}", path.display())))
}

fn load_bundle(path: &Path) -> Result<Bundle, CliError> {
    Ok(Bundle::read_json(open(path, "bundle")?)?)
}

fn load_model(path: &Path) -> Result<Model, CliError> {
    Ok(Model::read_json(open(path, "model")?)?)
}

fn load_latents(path: &Path) -> Result<Matrix<f64>, CliError> {
    Ok(read_latents(open(path, "latents")?)?)
}

fn space_name(space: TargetSpace) -> &'static str {
    match space {
        TargetSpace::W => "w",
        TargetSpace::WPlus => "wplus",
    }
}

fn write_json(run: &mut Run, name: &str, value: &impl Serialize) -> Result<(), CliError> {
    let mut w = run.create(name)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn write_batch(run: &mut Run, shape: ImageShape, images: &Matrix<f64>, previews: bool) -> Result<(), CliError> {
    let mut w = run.create("images.bin")?;
    write_images(&mut w, shape, images)?;
    w.flush()?;
    if previews && shape.channels == 3 {
        let (lo, hi) = value_range(images.as_slice());
        for i in 0..images.rows() {
            let mut w = run.create(&format!("image_{i:04}.ppm"))?;
            write_ppm(&mut w, shape, images.row(i), lo, hi)?;
            w.flush()?;
        }
    }
    Ok(())
}

pub fn init_gan(cfg: &InitGanConfig, out: &Path) -> Result<(), CliError> {
    let bundle = Bundle::init(cfg.seed, cfg.dims())?;
    let mut run = Run::begin(out)?;
    let mut w = run.create("bundle.json")?;
    bundle.write_json(&mut w)?;
    w.flush()?;
    run.derive("image_shape", bundle.image_shape());
    run.finish("init-gan", cfg)
}

pub fn fit_prior(cfg: &FitPriorConfig, out: &Path) -> Result<(), CliError> {
    let bundle = load_bundle(&cfg.bundle)?;
    if cfg.samples < 2 {
        return Err(CliError::Usage("fitting needs at least two samples".into()));
    }
    let w = bundle.sample_styles(cfg.seed, cfg.samples);
    let mut v = w.clone();
    for r in 0..v.rows() {
        lru_in_place(v.row_mut(r), V_SLOPE);
    }
    let model = Model::fit(&v, &w)?;
    let mut run = Run::begin(out)?;
    let mut f = run.create("model.json")?;
    model.write_json(&mut f)?;
    f.flush()?;
    run.derive("sigma_max", model.sigma_max());
    run.derive("epsilon", model.epsilon());
    run.finish("fit-prior", cfg)
}

pub fn sample(cfg: &SampleConfig, out: &Path) -> Result<(), CliError> {
    let bundle = load_bundle(&cfg.bundle)?;
    let styles = bundle.sample_styles(cfg.seed, cfg.count);
    let images = bundle.synthesize_batch(&styles)?;
    let mut run = Run::begin(out)?;
    let mut w = run.create("latents.bin")?;
    write_latents(&mut w, &styles)?;
    w.flush()?;
    write_batch(&mut run, bundle.image_shape(), &images, true)?;
    run.finish("sample", cfg)
}

pub fn render(cfg: &RenderConfig, out: &Path) -> Result<(), CliError> {
    let bundle = load_bundle(&cfg.bundle)?;
    let latents = load_latents(&cfg.latents)?;
    let images = if cfg.stack {
        let image = bundle.synthesize(&StyleStack::new(latents)?)?;
        Matrix::from_vec(1, image.len(), image)?
    } else {
        bundle.synthesize_batch(&latents)?
    };
    let mut run = Run::begin(out)?;
    write_batch(&mut run, bundle.image_shape(), &images, true)?;
    run.finish("render", cfg)
}

pub fn invert(mut cfg: InvertConfig, out: &Path) -> Result<(), CliError> {
    let bundle = load_bundle(&cfg.bundle)?;
    let model = load_model(&cfg.model)?;
    let (shape, images): (_, Matrix<f64>) = read_images(open(&cfg.target, "target")?)?;
    if shape != bundle.image_shape() {
        return Err(CliError::Usage(format!(
            "target images are {shape:?}, generator produces {:?}",
            bundle.image_shape()
        )));
    }
    if cfg.index >= images.rows() {
        return Err(CliError::Usage(format!(
            "index {} out of range for {} images",
            cfg.index,
            images.rows()
        )));
    }
    let inv = cfg.optimizer.inversion(cfg.space, cfg.seed);
    cfg.optimizer.learning_rate = Some(inv.learning_rate);
    cfg.optimizer.iterations = Some(inv.iterations);
    let result = run_inversion(images.row(cfg.index), &bundle, &model, &inv)?;
    let reconstruction = bundle.synthesize(&result.latent.to_stack(bundle.scales())?)?;

    let mut run = Run::begin(out)?;
    write_json(&mut run, "result.json", &result)?;
    let mut w = run.create("latent.bin")?;
    write_latents(&mut w, &result.latent.to_matrix())?;
    w.flush()?;
    let mut w = run.create("reconstruction.bin")?;
    write_images(&mut w, shape, &Matrix::from_vec(1, reconstruction.len(), reconstruction)?)?;
    w.flush()?;
    run.derive("final_image_error", result.final_image_error);
    run.finish("invert", &cfg)
}

pub fn correct(cfg: &CorrectConfig, out: &Path) -> Result<(), CliError> {
    let model = load_model(&cfg.model)?;
    let latents = load_latents(&cfg.latents)?;
    let method = match cfg.method {
        Method::Truncation => CorrectionConfig::truncation(cfg.psi)?,
        Method::Compression => CorrectionConfig::compression(cfg.tau)?,
    };
    let corrected = correct_rows(&latents, &model, &method)?;
    let mut run = Run::begin(out)?;
    let mut w = run.create("latents.bin")?;
    write_latents(&mut w, &corrected)?;
    w.flush()?;
    run.derive("rows", corrected.rows());
    if let Some(t) = method.threshold(&model) {
        run.derive("threshold", t);
        run.derive("sigma_max", model.sigma_max());
    }
    run.finish("correct", cfg)
}

fn write_report(run: &mut Run, report: &ExperimentReport) -> Result<(), CliError> {
    write_json(run, "report.json", report)?;
    for c in &report.conditions {
        let mut w = run.create(&format!("curve_{}.csv", c.label))?;
        write_curve_csv(&mut w, c)?;
        w.flush()?;
    }
    let mut w = csv::Writer::from_writer(run.create("summary.csv")?);
    let csv_err = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record([
        "condition",
        "endpoint_error",
        "midpoint_error",
        "mean_latent_error",
        "median_latent_error",
        "failures",
    ])
    .map_err(csv_err)?;
    for c in &report.conditions {
        w.write_record([
            c.label.clone(),
            c.endpoint_error.to_string(),
            c.midpoint_error.to_string(),
            c.mean_latent_error.to_string(),
            c.median_latent_error.to_string(),
            c.failures.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn setup(pairs: usize, seed: u64, oracle: bool) -> InterpolationSetup {
    let mut s = InterpolationSetup::new(pairs, seed);
    s.oracle_init = oracle;
    s
}

/// Each space with and without the prior.
fn prior_conditions(spaces: &[TargetSpace], optimizer: &OptimizerConfig) -> Result<Vec<Condition>, CliError> {
    if spaces.is_empty() {
        return Err(CliError::Usage("at least one space is required".into()));
    }
    let mut lambdas = vec![0.0];
    if optimizer.lambda != 0.0 {
        lambdas.push(optimizer.lambda);
    }
    let mut conditions = Vec::new();
    for &space in spaces {
        for &l in &lambdas {
            let mut opt = optimizer.clone();
            opt.lambda = l;
            conditions.push(Condition::new(
                format!("{}_lambda={l:e}", space_name(space)),
                opt.inversion(space, 0),
            ));
        }
    }
    Ok(conditions)
}

pub fn interpolation(cfg: InterpolationConfig, out: &Path) -> Result<(), CliError> {
    let bundle = load_bundle(&cfg.bundle)?;
    let model = load_model(&cfg.model)?;
    let conditions = prior_conditions(&cfg.spaces, &cfg.optimizer)?;
    let report = interpolation_experiment(&bundle, &model, &conditions, &setup(cfg.pairs, cfg.seed, cfg.oracle))?;
    let mut run = Run::begin(out)?;
    write_report(&mut run, &report)?;
    run.finish("experiment interpolation", &cfg)
}

pub fn reconstruction(cfg: ReconstructionConfig, out: &Path) -> Result<(), CliError> {
    let bundle = load_bundle(&cfg.bundle)?;
    let model = load_model(&cfg.model)?;
    let conditions = prior_conditions(&cfg.spaces, &cfg.optimizer)?;
    let mut sources = TargetSource::defaults(bundle.seed());
    if let Some(seed) = cfg.out_of_model_seed {
        sources[2] = TargetSource::OutOfModel { generator_seed: seed };
    }
    let setup = ReconstructionSetup {
        targets: cfg.targets,
        sources,
        seed: cfg.seed,
    };
    let report = reconstruction_experiment(&bundle, &model, &conditions, &setup)?;
    let mut run = Run::begin(out)?;
    write_json(&mut run, "report.json", &report)?;
    let mut w = csv::Writer::from_writer(run.create("table.csv")?);
    let csv_err = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record([
        "source",
        "condition",
        "mean_image_error",
        "median_image_error",
        "mean_latent_error",
        "median_latent_error",
        "mean_prior_energy",
        "failures",
    ])
    .map_err(csv_err)?;
    for c in &report.cells {
        w.write_record([
            c.source.clone(),
            c.condition.clone(),
            c.mean_image_error.to_string(),
            c.median_image_error.to_string(),
            c.mean_latent_error.to_string(),
            c.median_latent_error.to_string(),
            c.mean_prior_energy.to_string(),
            c.failures.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    run.finish("experiment reconstruction", &cfg)
}

pub fn lambda_sweep(cfg: LambdaSweepConfig, out: &Path) -> Result<(), CliError> {
    let bundle = load_bundle(&cfg.bundle)?;
    let model = load_model(&cfg.model)?;
    let base = cfg.optimizer.inversion(cfg.space, 0);
    let report = run_sweep(&bundle, &model, &base, &cfg.lambdas, &setup(cfg.pairs, cfg.seed, false))?;
    let mut run = Run::begin(out)?;
    write_report(&mut run, &report)?;
    run.finish("experiment lambda-sweep", &cfg)
}

pub fn fid_tradeoff(cfg: &FidTradeoffConfig, out: &Path) -> Result<(), CliError> {
    let bundle = load_bundle(&cfg.bundle)?;
    let model = load_model(&cfg.model)?;
    let mut s = TradeoffSetup::new(cfg.taus.clone(), cfg.samples, cfg.seed);
    s.tolerance = cfg.tolerance;
    let report = run_tradeoff(&bundle, &model, &s)?;
    let mut run = Run::begin(out)?;
    write_json(&mut run, "report.json", &report)?;
    let mut w = csv::Writer::from_writer(run.create("tradeoff.csv")?);
    let csv_err = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record([
        "tau",
        "psi",
        "fid_compression",
        "fid_truncation",
        "matched",
        "identity_compression",
        "identity_truncation",
        "pixel_std_compression",
        "pixel_std_truncation",
    ])
    .map_err(csv_err)?;
    for p in &report.points {
        w.write_record([
            p.tau.to_string(),
            p.psi.to_string(),
            p.fid_compression.to_string(),
            p.fid_truncation.to_string(),
            p.matched.to_string(),
            p.identity_compression.to_string(),
            p.identity_truncation.to_string(),
            p.pixel_std_compression.to_string(),
            p.pixel_std_truncation.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    run.finish("experiment fid-tradeoff", cfg)
}

pub fn pc_profile(cfg: &PcProfileConfig, out: &Path) -> Result<(), CliError> {
    let model = load_model(&cfg.model)?;
    let latents = match &cfg.latents {
        Some(p) => load_latents(p)?,
        None => load_bundle(&cfg.bundle)?.sample_styles(cfg.seed, cfg.samples),
    };
    let profile = pc_magnitude_profile(&latents, &model, cfg.components, cfg.tau)?;
    let mut run = Run::begin(out)?;
    write_json(&mut run, "profile.json", &profile)?;
    let mut w = csv::Writer::from_writer(run.create("profile.csv")?);
    let csv_err = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(["component", "flagged_mean", "flagged_std", "unflagged_mean", "unflagged_std"])
        .map_err(csv_err)?;
    for i in 0..profile.components {
        w.write_record([
            i.to_string(),
            profile.flagged.mean[i].to_string(),
            profile.flagged.std[i].to_string(),
            profile.unflagged.mean[i].to_string(),
            profile.unflagged.std[i].to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    run.derive("flagged_fraction", profile.flagged_fraction);
    run.finish("experiment pc-profile", cfg)
}

fn config<C: DeserializeOwned>(m: &Manifest) -> Result<C, CliError> {
    serde_json::from_value(m.config.clone()).map_err(|e| CliError::Format(format!("manifest config: {e}")))
}

pub fn replay(manifest: &Path, out: &Path) -> Result<(), CliError> {
    let m = Manifest::read(manifest)?;
    match m.command.as_str() {
        "init-gan" => init_gan(&config(&m)?, out),
        "fit-prior" => fit_prior(&config(&m)?, out),
        "sample" => sample(&config(&m)?, out),
        "render" => render(&config(&m)?, out),
        "invert" => invert(config(&m)?, out),
        "correct" => correct(&config(&m)?, out),
        "experiment interpolation" => interpolation(config(&m)?, out),
        "experiment reconstruction" => reconstruction(config(&m)?, out),
        "experiment lambda-sweep" => lambda_sweep(config(&m)?, out),
        "experiment fid-tradeoff" => fid_tradeoff(&config(&m)?, out),
        "experiment pc-profile" => pc_profile(&config(&m)?, out),
        other => Err(CliError::Format(format!("unknown command `{other}` in manifest"))),
    }
}
