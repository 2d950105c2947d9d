use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use csifb::analog::{train_analog_with, AnalogCheckpoint};
use csifb::chanmodel::{generate_dataset, mean_channel, split_dir, Split};
use csifb::checkpoint::{kind_of, CheckpointKind, MODEL_FILE};
use csifb::config::{checkpoint_name, RunConfig};
use csifb::digital::{train_digital_with, DigitalCheckpoint};
use csifb::eval::{check_report, compare, digital_envelope, emit, sweep, EvalSet, RateReport};
use csifb::selftest::{run_selftest, Physics};
use csifb::{Dataset, Scheme};

use crate::{Global, SchemeArg};

/// File name of the effective configuration echoed into every output directory.
pub const CONFIG_ECHO: &str = "config.toml";

fn load_config(g: &Global) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::desk(),
    };
    if let Some(seed) = g.seed {
        cfg.seed = seed;
        cfg.analog.hyper.seed = seed;
        cfg.digital.hyper.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn echo_config(cfg: &RunConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(CONFIG_ECHO);
    fs::write(&path, cfg.to_toml()?).with_context(|| format!("writing {}", path.display()))
}

fn data_root(g: &Global, cfg: &RunConfig) -> PathBuf {
    g.out.join(&cfg.paths.data)
}

fn dataset_exists(root: &Path) -> bool {
    [Split::Train, Split::Test].iter().all(|&s| split_dir(root, s).join("manifest.json").exists())
}

fn load_splits(root: &Path) -> Result<(Dataset, Dataset)> {
    if !dataset_exists(root) {
        bail!("no dataset under {}; run `csifb gen` first", root.display());
    }
    let train = Dataset::load(&split_dir(root, Split::Train))?;
    let test = Dataset::load(&split_dir(root, Split::Test))?;
    Ok((train, test))
}

pub fn gen(g: &Global) -> Result<ExitCode> {
    let cfg = load_config(g)?;
    let root = data_root(g, &cfg);
    if dataset_exists(&root) && !g.force {
        println!("dataset already exists at {}; pass --force to regenerate", root.display());
        return Ok(ExitCode::SUCCESS);
    }
    let s = &cfg.system;
    let (train, test) =
        generate_dataset(&cfg.geometry, s.n_c, s.n_t, cfg.dataset.n_train, cfg.dataset.n_test, cfg.seed, &root)?;
    echo_config(&cfg, &root)?;
    println!(
        "generated {} train and {} test samples ({}×{}, seed {}) in {}",
        train.len(),
        test.len(),
        s.n_c,
        s.n_t,
        cfg.seed,
        root.display()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn train(
    g: &Global,
    scheme: SchemeArg,
    snr_db: Option<f64>,
    rho: Option<f64>,
    lambda: Option<f64>,
    epochs: Option<usize>,
) -> Result<ExitCode> {
    let mut cfg = load_config(g)?;
    if let Some(e) = epochs {
        cfg.analog.hyper.epochs = e;
        cfg.digital.hyper.epochs = e;
    }
    let ckpt_root = g.out.join(&cfg.paths.checkpoints);
    match scheme {
        SchemeArg::Analog => {
            if lambda.is_some() {
                bail!("--lambda applies to digital training only");
            }
            let Some(snr) = snr_db else { bail!("analog training requires --snr-db") };
            let rhos = rho.map_or_else(|| cfg.system.rho_grid.clone(), |r| vec![r]);
            let (train, test) = load_splits(&data_root(g, &cfg))?;
            for r in rhos {
                let system = cfg.system_config(r, snr)?;
                let spec = cfg.analog_spec(r)?;
                let dir = ckpt_root.join(checkpoint_name(Scheme::Analog, Some(r), Some(snr), None));
                if dir.join(MODEL_FILE).exists() && !g.force {
                    println!("skipping {}: already exists", dir.display());
                    continue;
                }
                println!("training analog ρ={r} (n_f={}) at {snr} dB", system.n_f);
                let mut ckpt = train_analog_with(&train, &test, &system, &spec, &cfg.analog.hyper, &mut |e| {
                    println!(
                        "  epoch {:>3}  loss {:.5}  val nmse {:.2} dB  ({:.1}s)",
                        e.epoch, e.train_loss, e.val_nmse_db, e.seconds
                    )
                })?;
                ckpt.save(&dir)?;
                echo_config(&cfg, &dir)?;
                println!("wrote {}", dir.display());
            }
        }
        SchemeArg::Digital => {
            if snr_db.is_some() || rho.is_some() {
                bail!("digital training does not see the feedback link; drop --snr-db and --rho");
            }
            let Some(lam) = lambda else { bail!("digital training requires --lambda") };
            let spec = cfg.digital_spec(lam)?;
            let (train, test) = load_splits(&data_root(g, &cfg))?;
            let dir = ckpt_root.join(checkpoint_name(Scheme::Digital, None, None, Some(lam)));
            if dir.join(MODEL_FILE).exists() && !g.force {
                println!("skipping {}: already exists", dir.display());
                return Ok(ExitCode::SUCCESS);
            }
            println!("training digital λ={lam}");
            let mut ckpt = train_digital_with(&train, &test, &spec, &cfg.digital.hyper, &mut |e| {
                println!(
                    "  epoch {:>3}  loss {:.5}  val nmse {:.2} dB  val bits {:.1}  ({:.1}s)",
                    e.epoch, e.train_loss, e.val_nmse_db, e.val_bits, e.seconds
                )
            })?;
            ckpt.save(&dir)?;
            echo_config(&cfg, &dir)?;
            println!("wrote {}", dir.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn discover(root: &Path) -> Result<Vec<PathBuf>> {
    if !root.exists() {
        return Ok(Vec::new());
    }
    let mut dirs = Vec::new();
    for entry in fs::read_dir(root).with_context(|| format!("reading {}", root.display()))? {
        let p = entry?.path();
        if p.join(MODEL_FILE).exists() {
            dirs.push(p);
        }
    }
    dirs.sort();
    Ok(dirs)
}

pub fn eval(g: &Global, checkpoints: &[PathBuf], envelope: bool) -> Result<ExitCode> {
    let cfg = load_config(g)?;
    let dirs =
        if checkpoints.is_empty() { discover(&g.out.join(&cfg.paths.checkpoints))? } else { checkpoints.to_vec() };
    let mut analog = Vec::new();
    let mut digital = Vec::new();
    for d in &dirs {
        match kind_of(d).with_context(|| format!("reading {}", d.display()))? {
            CheckpointKind::Analog => analog.push(AnalogCheckpoint::load(d)?),
            CheckpointKind::Digital => digital.push(DigitalCheckpoint::load(d)?),
        }
    }
    let (train, test) = load_splits(&data_root(g, &cfg))?;
    let grid = cfg.sweep_grid();
    for c in &analog {
        let on_grid = grid.snr_fb_db.contains(&c.meta.trained_snr_fb_db)
            && grid.rho.iter().any(|&r| cfg.system_config(r, 0.0).is_ok_and(|s| s.n_f == c.meta.system.n_f));
        if !on_grid {
            println!(
                "warning: analog checkpoint (n_f={}, {} dB) is not on the configured grid",
                c.meta.system.n_f, c.meta.trained_snr_fb_db
            );
        }
    }
    let fallback = mean_channel(&train)?;
    let set = EvalSet::new(&test, &fallback, grid.snr_dl_db)?;
    let full = sweep(&mut analog, &mut digital, &set, &grid, cfg.seed)?;

    let reports = g.out.join(&cfg.paths.reports);
    let report = if envelope && !digital.is_empty() {
        let env = digital_envelope(&full)?;
        let rest = RateReport {
            rows: full.rows.iter().filter(|r| r.scheme != Scheme::Digital).cloned().collect(),
            skipped: full.skipped.clone(),
        };
        let mut merged = RateReport::merge([rest, env]);
        merged.skipped = full.skipped.clone();
        merged
    } else {
        full.clone()
    };
    for p in emit(&report, &reports)? {
        println!("wrote {}", p.display());
    }
    echo_config(&cfg, &reports)?;

    if !analog.is_empty() && !digital.is_empty() {
        let env = digital_envelope(&full)?;
        let analog_only = RateReport::new(full.scheme(Scheme::Analog).cloned().collect());
        let env_here = RateReport::new(
            env.rows
                .into_iter()
                .filter(|d| analog_only.rows.iter().any(|a| a.rho == d.rho && a.snr_fb_db == d.snr_fb_db))
                .collect(),
        );
        let deltas = compare(&analog_only, &env_here, set.perfect_rate(), set.floor_rate())?;
        let path = reports.join("deltas.csv");
        let mut w = csv::Writer::from_path(&path)?;
        for d in &deltas {
            w.serialize(d)?;
        }
        w.flush()?;
        println!("wrote {}", path.display());
    }

    let violations = check_report(&full);
    if violations.is_empty() {
        println!("report invariants: ok");
    } else {
        for v in &violations {
            println!("violation: {}: {}", v.invariant, v.detail);
        }
    }
    for s in &full.skipped {
        println!("skipped: {} ρ={} at {} dB: {}", s.scheme, s.rho, s.snr_fb_db, s.reason);
    }
    Ok(ExitCode::SUCCESS)
}

pub fn selftest(g: &Global) -> Result<ExitCode> {
    let outcomes = run_selftest(&Physics::default(), load_config(g)?.seed);
    let mut ok = true;
    for o in &outcomes {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("{tag}  {}: {}", o.invariant, o.detail);
        ok &= o.passed;
    }
    println!("{} of {} checks passed", outcomes.iter().filter(|o| o.passed).count(), outcomes.len());
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
