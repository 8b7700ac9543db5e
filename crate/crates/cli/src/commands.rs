use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Result};
use bgrd_core::bounds::{lower_bound_trivial, upper_bound_1};
use bgrd_core::channel::{run_channel_experiment, ChannelConfig, FailureMode};
use bgrd_core::codec::{default_epsilon1, run_codec, CodecConfig};
use bgrd_core::minimax::{bound_set_for_source, improved_lower_bound, improvement_ri, MinimaxConfig};
use bgrd_core::typicality::{concentration_experiment, DEFAULT_GRID_HALF_WIDTH, DEFAULT_GRID_STEP};
use bgrd_core::SourceModel;
use clap::ValueEnum;
use rayon::prelude::*;

use crate::config::ConfigFile;
use crate::output::{emit, Cell, Format, Table};
use crate::{ChannelArgs, Cli, CodecArgs, Command, SolverArgs, Spacing, SweepArgs, TypicalityArgs};

macro_rules! value_enum_from_str {
    ($t:ty) => {
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                <$t as ValueEnum>::from_str(s, true)
            }
        }
    };
}
value_enum_from_str!(Format);
value_enum_from_str!(Spacing);

const DEFAULT_P: f64 = 0.1;
const DEFAULT_SEED: u64 = 1;

/// Options shared by every subcommand, after merging flags and config.
struct Common<'a> {
    model: SourceModel,
    seed: u64,
    format: Format,
    out: Option<&'a Path>,
}

pub fn dispatch(cli: &Cli, config: &ConfigFile) -> Result<()> {
    let common = Common {
        model: SourceModel::new(config.pick(cli.p, "p", DEFAULT_P)?, config.pick(cli.sigma2, "sigma2", 1.0)?)?,
        seed: config.pick(cli.seed, "seed", DEFAULT_SEED)?,
        format: config.pick(cli.format, "format", Format::Csv)?,
        out: cli.out.as_deref(),
    };
    let table = match &cli.command {
        Command::Bounds(a) => bounds(a, &common, config)?,
        Command::Ri(a) => ri_curve(a, &common, config)?,
        Command::SimulateCodec(a) => simulate_codec(a, &common, config)?,
        Command::SimulateChannel(a) => simulate_channel(a, &common, config)?,
        Command::Typicality(a) => typicality(a, &common, config)?,
    };
    emit(&table, common.format, common.out)
}

fn solver(args: &SolverArgs, config: &ConfigFile) -> Result<MinimaxConfig> {
    let base = MinimaxConfig::default();
    let cfg = MinimaxConfig {
        l_grid_points: config.pick(args.l_grid, "l-grid", base.l_grid_points)?,
        u_grid_points: config.pick(args.u_grid, "u-grid", base.u_grid_points)?,
        tol: config.pick(args.tol, "tol", base.tol)?,
        ..base
    };
    cfg.validate()?;
    Ok(cfg)
}

struct Sweep {
    d_min: f64,
    d_max: f64,
    points: usize,
    spacing: Spacing,
}

impl Sweep {
    fn resolve(a: &SweepArgs, config: &ConfigFile, defaults: Sweep) -> Result<Self> {
        let s = Sweep {
            d_min: config.pick(a.d_min, "d-min", defaults.d_min)?,
            d_max: config.pick(a.d_max, "d-max", defaults.d_max)?,
            points: config.pick(a.points, "points", defaults.points)?,
            spacing: config.pick(a.spacing, "spacing", defaults.spacing)?,
        };
        if !(s.d_min > 0.0) || !(s.d_min <= s.d_max) || !s.d_max.is_finite() {
            bail!("need 0 < d-min <= d-max, got d-min = {}, d-max = {}", s.d_min, s.d_max);
        }
        if s.points == 0 {
            bail!("points must be at least 1");
        }
        Ok(s)
    }

    fn grid(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.d_min];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let t = i as f64 / last;
                match self.spacing {
                    _ if i + 1 == self.points => self.d_max,
                    Spacing::Linear => self.d_min + t * (self.d_max - self.d_min),
                    Spacing::Log => self.d_min * (self.d_max / self.d_min).powf(t),
                }
            })
            .collect()
    }
}

fn bounds(a: &SweepArgs, c: &Common, config: &ConfigFile) -> Result<Table> {
    let sweep = Sweep::resolve(a, config, Sweep { d_min: 0.005, d_max: 0.1, points: 40, spacing: Spacing::Linear })?;
    let cfg = solver(&a.solver, config)?;
    let rows = sweep
        .grid()
        .par_iter()
        .map(|&d| bound_set_for_source(c.model, d, &cfg))
        .collect::<bgrd_core::Result<Vec<_>>>()?;

    let mut t = Table::new(&["D", "ub1", "ub2", "lb_trivial", "lb_improved", "ri", "L", "U", "r", "converged"]);
    for b in rows {
        let g = b.game_point;
        t.push(vec![
            b.distortion.into(),
            b.ub1.into(),
            b.ub2.into(),
            b.lb_trivial.into(),
            b.lb_improved.into(),
            b.ri.into(),
            g.score_threshold.into(),
            g.tail_threshold.into(),
            g.false_support.into(),
            b.converged.into(),
        ]);
    }
    Ok(t)
}

fn ri_curve(a: &SweepArgs, c: &Common, config: &ConfigFile) -> Result<Table> {
    let sweep = Sweep::resolve(a, config, Sweep { d_min: 1e-6, d_max: 1e-2, points: 25, spacing: Spacing::Log })?;
    let cfg = solver(&a.solver, config)?;
    let p = c.model.p();
    let sigma2 = c.model.sigma2();
    let rows = sweep
        .grid()
        .par_iter()
        .map(|&d| improvement_ri(d / sigma2, p, &cfg).map(|r| (d, r)))
        .collect::<bgrd_core::Result<Vec<_>>>()?;

    let asymptote = p * (1.0 / p).log2();
    let mut t = Table::new(&["D", "ri", "asymptote", "L", "converged"]);
    for (d, r) in rows {
        t.push(vec![d.into(), r.ri.into(), asymptote.into(), r.witness.score_threshold.into(), r.converged.into()]);
    }
    Ok(t)
}

fn simulate_codec(a: &CodecArgs, c: &Common, config: &ConfigFile) -> Result<Table> {
    let p = c.model.p();
    let sigma2 = c.model.sigma2();
    let n = config.pick(a.n, "n", 10_000usize)?;
    let blocks = config.pick(a.blocks, "blocks", 100usize)?;
    if blocks == 0 {
        bail!("blocks must be at least 1");
    }
    let target = config.pick(a.target_d, "target-d", 0.025)?;
    let mut cfg = CodecConfig::new(n, p, target / sigma2, c.seed);
    cfg.epsilon1 = config.pick(a.epsilon1, "epsilon1", default_epsilon1(n, p))?;
    cfg.quantizer_step = config.pick_opt(a.step, "step")?;
    let solver_cfg = solver(&a.solver, config)?;

    let r = run_codec(&cfg, blocks)?;
    let d = r.empirical_distortion;
    let mut t = Table::new(&[
        "n", "blocks", "p", "target_D", "epsilon1", "quantizer_step", "empirical_rate", "empirical_distortion",
        "escape_distortion", "support_bits", "value_bits", "atypical_flag_count", "clamped_count",
        "lb_trivial", "lb_improved", "ub1", "seed",
    ]);
    t.push(vec![
        r.n.into(),
        r.blocks.into(),
        p.into(),
        target.into(),
        r.epsilon1.into(),
        r.quantizer_step.into(),
        r.empirical_rate.into(),
        (d * sigma2).into(),
        (r.escape_distortion * sigma2).into(),
        r.support_bits.into(),
        r.value_bits.into(),
        r.atypical_flag_count.into(),
        r.clamped_count.into(),
        lower_bound_trivial(d, p)?.into(),
        improved_lower_bound(d, p, &solver_cfg)?.into(),
        upper_bound_1(d, p)?.into(),
        r.seed.into(),
    ]);
    Ok(t)
}

fn simulate_channel(a: &ChannelArgs, c: &Common, config: &ConfigFile) -> Result<Table> {
    let p = c.model.p();
    let sigma2 = c.model.sigma2();
    let n = config.pick(a.n, "n", 1000usize)?;
    let trials = config.pick(a.trials, "trials", 500usize)?;
    let d = config.pick(a.d, "d", 0.01)? / sigma2;
    let solver_cfg = solver(&a.solver, config)?;
    let witness = improvement_ri(d, p, &solver_cfg)?;

    let rate = match config.pick_opt(a.rate, "rate")? {
        Some(r) => r,
        None => config.pick(a.rate_factor, "rate-factor", 0.5)? * witness.ri,
    };
    let (threshold, source) = match config.pick_opt(a.threshold, "threshold")? {
        Some(l) => (l / sigma2.sqrt(), "flag"),
        None => {
            eprintln!("bgrd: score threshold defaults to the optimizer witness L = {}", witness.witness.score_threshold);
            (witness.witness.score_threshold, "witness")
        }
    };
    let mut cfg = ChannelConfig::new(n, p, rate, threshold, d, trials, c.seed);
    cfg.epsilon = config.pick(a.epsilon, "epsilon", cfg.epsilon)?;
    let r = run_channel_experiment(&cfg)?;

    if let Some(path) = config.pick_opt(a.failures.clone(), "failures")? {
        let mut f = Table::new(&["mode", "count", "fraction"]);
        for mode in FailureMode::ALL {
            let k = r.failure_count(mode);
            f.push(vec![mode.as_str().into(), k.into(), (k as f64 / r.trials as f64).into()]);
        }
        emit(&f, Format::Csv, Some(&path))?;
    }

    let mut t = Table::new(&[
        "n", "p", "D", "rate_tilde", "ri", "log2_M", "L", "threshold_source", "explicit_codebooks", "trials", "errors",
        "error_rate", "margin_mean", "margin_std", "margin_min", "margin_max", "mean_distortion", "seed",
    ]);
    t.push(vec![
        r.n.into(),
        p.into(),
        (d * sigma2).into(),
        r.rate_tilde.into(),
        witness.ri.into(),
        r.log2_codebook_size.into(),
        (r.score_threshold * sigma2.sqrt()).into(),
        source.into(),
        r.explicit_codebooks.into(),
        r.trials.into(),
        r.errors.into(),
        r.error_rate.into(),
        r.score_margin.mean.into(),
        r.score_margin.std.into(),
        Cell::Int(r.score_margin.min),
        Cell::Int(r.score_margin.max),
        (r.mean_distortion * sigma2).into(),
        r.seed.into(),
    ]);
    Ok(t)
}

fn typicality(a: &TypicalityArgs, c: &Common, config: &ConfigFile) -> Result<Table> {
    let n_values: Vec<usize> = match a.n_values.clone() {
        Some(v) => v,
        None => match config.get::<String>("n-values")? {
            Some(s) => s
                .split(',')
                .map(|x| x.trim().parse::<usize>().map_err(|e| anyhow::anyhow!("n-values entry {x:?}: {e}")))
                .collect::<Result<_>>()?,
            None => vec![100, 1000, 10_000],
        },
    };
    if n_values.is_empty() {
        bail!("n-values must not be empty");
    }
    let epsilon = config.pick(a.epsilon, "epsilon", 0.05)?;
    let trials = config.pick(a.trials, "trials", 200usize)?;
    let k = config.pick(a.grid_half_width, "grid-half-width", DEFAULT_GRID_HALF_WIDTH)?;
    let omega = config.pick(a.grid_step, "grid-step", DEFAULT_GRID_STEP)?;
    let rows = concentration_experiment(&n_values, epsilon, trials, c.seed, k, omega)?;

    let mut t = Table::new(&["n", "epsilon", "trials", "fraction_typical", "seed"]);
    for r in rows {
        t.push(vec![r.n.into(), r.epsilon.into(), r.trials.into(), r.fraction_typical.into(), r.seed.into()]);
    }
    Ok(t)
}
