//! Command execution against a resolved configuration.

use std::cell::OnceCell;
use std::collections::BTreeMap;

use serde_json::{json, Value};
use subfrac::ccnorm::cc_eval;
use subfrac::fraclap::{frac_power, psi_pole, psi_spatial, psi_time, MomentTable, Route, StripSelector};
use subfrac::heatkernel::{heat_kernel, hk_eval_with, hk_moment, hk_moment_quadrature, sample_diffusion, HeatCloud};
use subfrac::riesz::{boundary_moment, convolution_check, d_alpha, p_alpha, sigma, Backend, SpectralValue};
use subfrac::{GroupConfig, Point, TestFunction};

use crate::cache::{cache_key, Cache};
use crate::cli::{CcCmd, Command, FraclapCmd, HkCmd, Method, MomentsArg, PsiCmd, PsiRoute, RieszCmd, TableCmd};
use crate::config::RunConfig;
use crate::dsl::parse_fn;
use crate::error::{CliError, CliResult};
use crate::report::{Emitter, Record};
use crate::verify;

pub struct Ctx<'a> {
    pub cfg: RunConfig,
    pub digest: String,
    pub cache: Option<Cache>,
    pub force: bool,
    pub emit: Emitter<'a>,
    pub records: Vec<Record>,
    cloud: OnceCell<HeatCloud>,
}

pub type Params = BTreeMap<String, Value>;

pub fn params<const K: usize>(items: [(&str, Value); K]) -> Params {
    items.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

impl<'a> Ctx<'a> {
    pub fn new(cfg: RunConfig, cache: Option<Cache>, force: bool, emit: Emitter<'a>) -> Self {
        Self {
            digest: cfg.digest(),
            cfg,
            cache,
            force,
            emit,
            records: Vec::new(),
            cloud: OnceCell::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.cfg.n
    }

    pub fn point(&self, coords: &[f64]) -> CliResult<Point> {
        Ok(Point::in_group(GroupConfig::new(self.n())?, coords.to_vec())?)
    }

    pub fn field(&self, dsl: &str) -> CliResult<TestFunction> {
        Ok(parse_fn(dsl)?.build(self.n())?)
    }

    /// Diffusion cloud for the configured sampler, drawn once per run.
    pub fn cloud(&self) -> CliResult<&HeatCloud> {
        if let Some(c) = self.cloud.get() {
            return Ok(c);
        }
        let c = sample_diffusion(GroupConfig::new(self.n())?, &self.cfg.sampler)?;
        Ok(self.cloud.get_or_init(|| c))
    }

    pub fn guard(&self) -> CliResult<()> {
        if self.n() > 2 && !self.force {
            return Err(CliError::Usage(format!(
                "n = {} is outside the tested range and expensive; pass --force to run it",
                self.n()
            )));
        }
        Ok(())
    }

    pub fn record(&self, op: &str, params: Params, value: f64, error: f64, method: &str) -> Record {
        Record {
            op: op.to_string(),
            params,
            value,
            error,
            target: None,
            tol: None,
            pass: None,
            method: method.to_string(),
            config_digest: self.digest.clone(),
            seed: self.cfg.sampler.seed,
        }
    }

    pub fn emit(&mut self, r: Record) -> CliResult<()> {
        self.emit.record(&r)?;
        self.records.push(r);
        Ok(())
    }

    /// Emits the cached record for `(op, params)` or computes, stores and
    /// emits it.
    fn cached<F>(&mut self, op: &str, params: Params, compute: F) -> CliResult<()>
    where
        F: FnOnce(&Self) -> CliResult<Record>,
    {
        let key = cache_key(op, &params, &self.digest);
        if let Some(entry) = self.cache.as_ref().and_then(|c| c.get(&key)) {
            return self.emit(entry.record);
        }
        let r = compute(self)?;
        if let Some(c) = &self.cache {
            c.put(&key, &r)?;
        }
        self.emit(r)
    }

    fn backend_method(&self, method: Option<Method>) -> Method {
        method.unwrap_or(if self.n() <= 2 { Method::Quadrature } else { Method::Mc })
    }

    fn spectral<F>(&self, method: Method, f: F) -> CliResult<SpectralValue>
    where
        F: Fn(Backend) -> subfrac::Result<SpectralValue>,
    {
        Ok(match method {
            Method::Quadrature => f(Backend::Quadrature(&self.cfg.quadrature))?,
            Method::Mc => f(Backend::MonteCarlo(self.cloud()?))?,
        })
    }

    pub fn moments(&self, arg: MomentsArg) -> CliResult<MomentTable> {
        let n = self.n();
        Ok(match arg {
            MomentsArg::Reference => MomentTable::reference(n, 6)?,
            MomentsArg::Quadrature => MomentTable::quadrature(n, 6, &self.cfg.quadrature)?,
            MomentsArg::Mc => MomentTable::monte_carlo(self.cloud()?, 6)?,
        })
    }

    pub fn default_moments(&self, arg: Option<MomentsArg>) -> MomentsArg {
        arg.unwrap_or(if self.n() == 1 { MomentsArg::Quadrature } else { MomentsArg::Mc })
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Quadrature => "quadrature",
        Method::Mc => "monte-carlo",
    }
}

fn moments_name(m: MomentsArg) -> &'static str {
    match m {
        MomentsArg::Reference => "reference",
        MomentsArg::Quadrature => "quadrature",
        MomentsArg::Mc => "monte-carlo",
    }
}

fn route_name(r: Route) -> &'static str {
    match r {
        Route::Spatial => "spatial",
        Route::Time => "time",
        Route::Pole => "pole",
        Route::NearPole => "near-pole",
    }
}

fn spectral_method(v: &SpectralValue) -> String {
    format!("{:?}", v.method).to_lowercase()
}

/// Runs one command; returns the process exit code.
pub fn execute(ctx: &mut Ctx, command: &Command) -> CliResult<i32> {
    match command {
        Command::Hk { cmd } => hk(ctx, cmd)?,
        Command::Ccnorm { cmd: CcCmd::Eval { point } } => {
            let x = ctx.point(point)?;
            let p = params([("point", json!(point))]);
            ctx.cached("ccnorm.eval", p.clone(), |c| {
                let e = cc_eval(&x)?;
                let branch = format!("{:?}", e.branch).to_lowercase();
                Ok(c.record("ccnorm.eval", p, e.value, 0.0, &branch))
            })?;
        }
        Command::Riesz { cmd } => riesz(ctx, cmd)?,
        Command::Psi { cmd } => psi(ctx, cmd)?,
        Command::Fraclap { cmd } => fraclap(ctx, cmd)?,
        Command::Verify { suite } => {
            ctx.guard()?;
            return verify::run(ctx, *suite);
        }
        Command::Table { kind } => table(ctx, kind)?,
        Command::Replay { .. } => unreachable!("replay is dispatched before configuration"),
    }
    Ok(0)
}

fn hk(ctx: &mut Ctx, cmd: &HkCmd) -> CliResult<()> {
    match cmd {
        HkCmd::Eval { t, point } => {
            let x = ctx.point(point)?;
            let p = params([("t", json!(t)), ("point", json!(point))]);
            ctx.cached("hk.eval", p.clone(), |c| {
                let e = hk_eval_with(*t, &x, &c.cfg.quadrature)?;
                Ok(c.record("hk.eval", p, e.value, e.error, "quadrature"))
            })
        }
        HkCmd::Moment { gamma, t, method } => {
            ctx.guard()?;
            let method = method.unwrap_or(if ctx.n() == 1 { Method::Quadrature } else { Method::Mc });
            let p = params([("gamma", json!(gamma)), ("t", json!(t)), ("method", json!(method_name(method)))]);
            ctx.cached("hk.moment", p.clone(), |c| {
                let e = match method {
                    Method::Quadrature => hk_moment_quadrature(gamma, *t, c.n(), &c.cfg.quadrature)?,
                    Method::Mc => hk_moment(gamma, *t, c.cloud()?)?,
                };
                let m = format!("{:?}", e.method).to_lowercase();
                Ok(c.record("hk.moment", p, e.value, e.std_err, &m))
            })
        }
    }
}

fn riesz(ctx: &mut Ctx, cmd: &RieszCmd) -> CliResult<()> {
    ctx.guard()?;
    match cmd {
        RieszCmd::Palpha { alpha, point } => {
            let x = ctx.point(point)?;
            let p = params([("alpha", json!(alpha)), ("point", json!(point))]);
            ctx.cached("riesz.palpha", p.clone(), |c| {
                let q = &c.cfg.quadrature;
                let v = p_alpha(*alpha, &x, q)?;
                let coarse = p_alpha(*alpha, &x, &q.coarse())?;
                Ok(c.record("riesz.palpha", p, v, (v - coarse).abs(), "quadrature"))
            })
        }
        RieszCmd::Sigma { alpha, method } => {
            let m = ctx.backend_method(*method);
            let p = params([("alpha", json!(alpha)), ("method", json!(method_name(m)))]);
            ctx.cached("riesz.sigma", p.clone(), |c| {
                let v = c.spectral(m, |b| sigma(*alpha, c.n(), b))?;
                Ok(c.record("riesz.sigma", p, v.value, v.std_err, &spectral_method(&v)))
            })
        }
        RieszCmd::Dalpha { alpha, index, method } => {
            let m = ctx.backend_method(*method);
            let p = params([
                ("alpha", json!(alpha)),
                ("index", json!(index)),
                ("method", json!(method_name(m))),
            ]);
            ctx.cached("riesz.dalpha", p.clone(), |c| {
                let v = c.spectral(m, |b| d_alpha(*alpha, *index, c.n(), b))?;
                Ok(c.record("riesz.dalpha", p, v.value, v.std_err, &spectral_method(&v)))
            })
        }
        RieszCmd::Bmoment { gamma, alpha, method } => {
            let m = ctx.backend_method(*method);
            let p = params([
                ("gamma", json!(gamma)),
                ("alpha", json!(alpha)),
                ("method", json!(method_name(m))),
            ]);
            ctx.cached("riesz.bmoment", p.clone(), |c| {
                let v = c.spectral(m, |b| boundary_moment(gamma, *alpha, c.n(), b))?;
                Ok(c.record("riesz.bmoment", p, v.value, v.std_err, &spectral_method(&v)))
            })
        }
        RieszCmd::Conv { alpha, beta, point } => {
            let x = ctx.point(point)?;
            let p = params([("alpha", json!(alpha)), ("beta", json!(beta)), ("point", json!(point))]);
            ctx.cached("riesz.conv", p.clone(), |c| {
                let r = convolution_check(*alpha, *beta, &x, &c.cfg.sampler, &c.cfg.quadrature)?;
                let mut rec = c.record("riesz.conv", p, r.rhs, r.std_err, "monte-carlo");
                rec.target = Some(r.lhs);
                Ok(rec)
            })
        }
    }
}

fn psi(ctx: &mut Ctx, cmd: &PsiCmd) -> CliResult<()> {
    ctx.guard()?;
    let PsiCmd::Eval {
        alpha,
        phi,
        point,
        route,
        moments,
    } = cmd;
    let field = ctx.field(phi)?;
    let x = ctx.point(point)?;
    let strip = StripSelector::new(*alpha, ctx.n())?;
    let needs_moments = strip.at_pole || *route == PsiRoute::Time;
    let msrc = ctx.default_moments(*moments);
    let mut p = params([
        ("alpha", json!(alpha)),
        ("phi", json!(parse_fn(phi)?.to_string())),
        ("point", json!(point)),
        ("route", json!(if *route == PsiRoute::Time { "time" } else { "spatial" })),
    ]);
    if needs_moments {
        p.insert("moments".into(), json!(moments_name(msrc)));
    }
    ctx.cached("psi.eval", p.clone(), |c| {
        let r = if let Some(m) = strip.pole() {
            psi_pole(&field, &x, m, &c.moments(msrc)?)?
        } else if *route == PsiRoute::Time {
            psi_time(&field, &x, *alpha, &c.moments(msrc)?, &c.cfg.quadrature)?
        } else {
            psi_spatial(&field, &x, *alpha, &c.cfg.quadrature)?
        };
        Ok(c.record("psi.eval", p, r.value, r.error, route_name(r.route)))
    })
}

fn fraclap(ctx: &mut Ctx, cmd: &FraclapCmd) -> CliResult<()> {
    ctx.guard()?;
    let FraclapCmd::Apply { s, phi, point, moments } = cmd;
    let field = ctx.field(phi)?;
    let x = ctx.point(point)?;
    let msrc = ctx.default_moments(*moments);
    let p = params([
        ("s", json!(s)),
        ("phi", json!(parse_fn(phi)?.to_string())),
        ("point", json!(point)),
        ("moments", json!(moments_name(msrc))),
    ]);
    ctx.cached("fraclap.apply", p.clone(), |c| {
        // only pole and near-pole evaluations read the moment table
        let nearest = (*s).round();
        let table = if nearest >= 0.0 && (s - nearest).abs() < 1e-6 {
            c.moments(msrc)?
        } else {
            MomentTable::reference(c.n(), 6)?
        };
        let r = frac_power(&field, *s, &x, &c.cfg.quadrature, &table)?;
        Ok(c.record("fraclap.apply", p, r.value, r.error, route_name(r.route)))
    })
}

fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![a];
    }
    (0..count).map(|k| a + (b - a) * k as f64 / (count - 1) as f64).collect()
}

fn table(ctx: &mut Ctx, kind: &TableCmd) -> CliResult<()> {
    ctx.guard()?;
    match kind {
        TableCmd::Psi {
            phi,
            point,
            alpha_min,
            alpha_max,
            count,
        } => {
            let field = ctx.field(phi)?;
            let x = ctx.point(point)?;
            let moments = ctx.moments(ctx.default_moments(None))?;
            let mut rows = Vec::new();
            for a in linspace(*alpha_min, *alpha_max, *count) {
                let strip = StripSelector::new(a, ctx.n())?;
                let r = match strip.pole() {
                    Some(m) => psi_pole(&field, &x, m, &moments)?,
                    None => psi_spatial(&field, &x, a, &ctx.cfg.quadrature)?,
                };
                rows.push(vec![a, r.value, r.error, strip.m as f64]);
            }
            ctx.emit.table(&["alpha", "psi", "error", "strip"], &rows)
        }
        TableCmd::Hk { direction, r_max, count } => {
            let dir = ctx.point(direction)?;
            let n = ctx.n();
            let mut rows = Vec::new();
            for r in linspace(0.0, *r_max, *count) {
                let y = dir.dilate(r.max(f64::MIN_POSITIVE))?;
                let r2 = y.horizontal().iter().map(|v| v * v).sum();
                rows.push(vec![r, heat_kernel(n, 1.0, r2, y.center())?]);
            }
            ctx.emit.table(&["r", "h"], &rows)
        }
        TableCmd::Sigma {
            alpha_min,
            alpha_max,
            count,
            method,
        } => {
            let m = ctx.backend_method(*method);
            let mut rows = Vec::new();
            for a in linspace(*alpha_min, *alpha_max, *count) {
                let v = ctx.spectral(m, |b| sigma(a, ctx.n(), b))?;
                rows.push(vec![a, v.value, v.std_err]);
            }
            ctx.emit.table(&["alpha", "sigma", "error"], &rows)
        }
    }
}
