use crate::config::{RunConfig, WickMode};
use btrengine::btr::btr_compute;
use btrengine::curve::{quadratic_residual, solve_one_cut};
use btrengine::model::action_equivalence;
use btrengine::omega2::{check_hypothesis2, solve_f};
use btrengine::sampler::{compare_density, metropolis_run};
use btrengine::wick::{CylinderMode, Expansion, WickOracle};
use btrengine::{Complex, Omega02, OmegaTable, PoleBasisForm, SpectralData};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::fmt::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    CheckAction,
    Wick,
    Curve,
    Density,
    Omega02,
    Btr,
    SdeCheck,
    TCheck,
    Sample,
}

pub const ALL_STAGES: [Stage; 9] = [
    Stage::CheckAction,
    Stage::Wick,
    Stage::Curve,
    Stage::Density,
    Stage::Omega02,
    Stage::Btr,
    Stage::SdeCheck,
    Stage::TCheck,
    Stage::Sample,
];

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::CheckAction => "check-action",
            Stage::Wick => "wick",
            Stage::Curve => "curve",
            Stage::Density => "density",
            Stage::Omega02 => "omega02",
            Stage::Btr => "btr",
            Stage::SdeCheck => "sde-check",
            Stage::TCheck => "t-check",
            Stage::Sample => "sample",
        }
    }

    /// Stages that run before this one, itself last.
    pub fn pipeline(self) -> Vec<Stage> {
        use Stage::*;
        match self {
            CheckAction | Wick | Curve => vec![self],
            Density | Sample => vec![Curve, self],
            Omega02 => vec![Curve, Omega02],
            Btr => vec![Curve, Omega02, Btr],
            SdeCheck | TCheck => vec![Curve, Omega02, Btr, self],
        }
    }

    /// Config sections the output depends on (the cache key material).
    pub fn key_material(self, cfg: &RunConfig) -> Value {
        use Stage::*;
        match self {
            CheckAction => json!({"checks": cfg.checks, "seed": cfg.sample.seed}),
            Wick => json!({"model": cfg.model, "wick": cfg.wick}),
            Curve | Density => json!({"model": cfg.model, "solver": cfg.solver, "checks": cfg.checks}),
            Omega02 | Btr | SdeCheck | TCheck => {
                json!({"model": cfg.model, "solver": cfg.solver, "btr": cfg.btr, "checks": cfg.checks})
            }
            Sample => json!({"model": cfg.model, "solver": cfg.solver, "sample": cfg.sample, "checks": cfg.checks}),
        }
    }
}

/// One residual compared against its tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `"<= 1e-8"`-style bound.
    pub bound: String,
    pub pass: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Check { name: name.into(), value, bound: format!("<= {tol:e}"), pass: value <= tol }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageOutput {
    pub stage: String,
    /// File name to contents.
    pub files: BTreeMap<String, String>,
    pub checks: Vec<Check>,
}

impl StageOutput {
    fn new(stage: Stage) -> Self {
        StageOutput { stage: stage.name().into(), ..Default::default() }
    }

    fn json(&mut self, name: &str, v: &Value) {
        let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
        s.push('\n');
        self.files.insert(name.into(), s);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Floats in tables: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = format!("{header}\n");
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

fn form_json(f: &PoleBasisForm) -> Value {
    let terms: Vec<Value> = f
        .terms()
        .iter()
        .map(|(k, c)| {
            let idx: Vec<Value> = k.iter().map(|(p, o)| json!([p.label(), o])).collect();
            json!({"index": idx, "coeff": c})
        })
        .collect();
    json!(terms)
}

/// Perimeter vectors `ℓ₁ ≤ … ≤ ℓ_n` with entries in `1..=max`.
fn perimeter_vectors(n: usize, max: u32) -> Vec<Vec<u32>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = vec![];
    for rest in perimeter_vectors(n - 1, max) {
        let lo = rest.last().copied().unwrap_or(1);
        for l in lo..=max {
            let mut v = rest.clone();
            v.push(l);
            out.push(v);
        }
    }
    out
}

/// Lazily built shared inputs for one invocation.
pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    curve: OnceCell<SpectralData>,
    omega02: OnceCell<Omega02>,
    table: OnceCell<OmegaTable>,
}

type Res<T> = Result<T, String>;

impl<'a> Context<'a> {
    pub fn new(cfg: &'a RunConfig) -> Self {
        Context { cfg, curve: OnceCell::new(), omega02: OnceCell::new(), table: OnceCell::new() }
    }

    fn curve(&self) -> Res<&SpectralData> {
        if self.curve.get().is_none() {
            let c = solve_one_cut(&self.cfg.model, &self.cfg.solver).map_err(|e| format!("curve: {e}"))?;
            let _ = self.curve.set(c);
        }
        Ok(self.curve.get().unwrap())
    }

    fn omega02(&self) -> Res<&Omega02> {
        if self.omega02.get().is_none() {
            let o = solve_f(&self.cfg.model, self.curve()?).map_err(|e| format!("omega02: {e}"))?;
            let _ = self.omega02.set(o);
        }
        Ok(self.omega02.get().unwrap())
    }

    fn table(&self) -> Res<&OmegaTable> {
        if self.table.get().is_none() {
            let t = btr_compute(&self.cfg.model, self.curve()?, &self.cfg.btr).map_err(|e| format!("btr: {e}"))?;
            let _ = self.table.set(t);
        }
        Ok(self.table.get().unwrap())
    }

    pub fn run(&self, stage: Stage) -> Res<StageOutput> {
        match stage {
            Stage::CheckAction => self.check_action(),
            Stage::Wick => self.wick(),
            Stage::Curve => self.curve_stage(),
            Stage::Density => self.density(),
            Stage::Omega02 => self.omega02_stage(),
            Stage::Btr => self.btr(),
            Stage::SdeCheck => self.sde_check(),
            Stage::TCheck => self.t_check(),
            Stage::Sample => self.sample(),
        }
    }

    fn check_action(&self) -> Res<StageOutput> {
        let c = &self.cfg.checks;
        let r = action_equivalence(self.cfg.sample.seed, c.action_trials).map_err(|e| e.to_string())?;
        let mut out = StageOutput::new(Stage::CheckAction);
        out.json("check_action.json", &json!(r));
        out.checks.push(Check::at_most("action_direct vs action_compiled", r.max_gap, c.action_tol));
        Ok(out)
    }

    fn wick(&self) -> Res<StageOutput> {
        let w = &self.cfg.wick;
        let model = &self.cfg.model;
        let mode = match w.mode {
            WickMode::Dressed => CylinderMode::Dressed,
            WickMode::Perturbative => CylinderMode::Perturbative,
            WickMode::Auto if model.plain_1mm => CylinderMode::Perturbative,
            WickMode::Auto => CylinderMode::Dressed,
        };
        let oracle = WickOracle::new(w.budget);
        let ex = Expansion::new(&oracle, model, w.order, mode).map_err(|e| format!("wick: {e}"))?;
        let mut out = StageOutput::new(Stage::Wick);
        let mut summary = vec![];
        for ins in &w.insertions {
            let label: Vec<String> = ins.iter().map(|l| l.to_string()).collect();
            let series = ex.connected_correlator(ins).map_err(|e| format!("wick {ins:?}: {e}"))?;
            let rows = series.rows();
            let mut table: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
            for (m, n, c) in &rows {
                table.entry(m.clone()).or_default().insert(n.to_string(), c.clone());
            }
            let rows = rows.into_iter().map(|(m, n, c)| vec![m, n.to_string(), c]);
            out.files.insert(format!("wick_{}.csv", label.join("-")), csv("monomial,N_exponent,coefficient", rows));
            let mut q = BTreeMap::new();
            for g in 0..=1u32 {
                if let Ok(v) = ex.stuffed_map_value(g, ins, model.t) {
                    q.insert(g.to_string(), v);
                }
            }
            summary.push(json!({"insertions": ins, "series": table, "stuffed_maps": q}));
        }
        out.json("wick.json", &json!({"order": w.order, "mode": format!("{mode:?}"), "correlators": summary}));
        Ok(out)
    }

    fn curve_stage(&self) -> Res<StageOutput> {
        let c = self.curve()?;
        let q = quadratic_residual(c, 50);
        let mass = c.total_mass(4096);
        let mut out = StageOutput::new(Stage::Curve);
        out.json("curve.json", &json!({"curve": c, "quadratic_residual": q, "total_mass": mass}));
        out.checks.push(Check::at_most("quadratic residual", q, self.cfg.checks.quadratic_tol));
        Ok(out)
    }

    fn density(&self) -> Res<StageOutput> {
        let c = self.curve()?;
        let m = self.cfg.checks.density_points.max(2);
        let rows = (0..m).map(|i| {
            let s = c.a + (c.b - c.a) * i as f64 / (m - 1) as f64;
            vec![fmt_f64(s), fmt_f64(c.density(s).unwrap_or(0.0))]
        });
        let mut out = StageOutput::new(Stage::Density);
        out.files.insert("density.csv".into(), csv("s,phi", rows));
        Ok(out)
    }

    fn omega02_stage(&self) -> Res<StageOutput> {
        let om = self.omega02()?;
        let radius = 1.0 + self.cfg.btr.epsilon;
        let pts: Vec<(Complex, Complex)> = (0..20)
            .map(|j| {
                let z = Complex::from_polar(radius, 0.3 + 0.77 * j as f64);
                let w = Complex::from_polar(1.5 + 0.07 * j as f64, 1.1 + 1.9 * j as f64);
                (z, w)
            })
            .collect();
        let func = om.functional_residual(&pts);
        let rows = pts.iter().map(|(z, w)| {
            let v = om.eval(*z, *w).unwrap_or(Complex::new(f64::NAN, f64::NAN));
            [z.re, z.im, w.re, w.im, v.re, v.im].iter().map(|x| fmt_f64(*x)).collect()
        });
        let mut out = StageOutput::new(Stage::Omega02);
        out.files.insert("omega02_probes.csv".into(), csv("z_re,z_im,zeta_re,zeta_im,value_re,value_im", rows));
        out.json(
            "omega02.json",
            &json!({
                "b": om.b, "gamma": om.gamma, "C": om.c.to_rows(), "C_inverse": om.c_inverse.to_rows(), "nu": om.nu.to_rows(), "S": om.s.to_rows(),
                "kernel_dimension": check_hypothesis2(&om.c), "functional_residual": func,
            }),
        );
        out.checks.push(Check::at_most("functional equation on gamma", func, self.cfg.checks.functional_tol));
        Ok(out)
    }

    fn btr(&self) -> Res<StageOutput> {
        let t = self.table()?;
        let maxp = self.cfg.checks.max_perimeter;
        let mut topologies: Vec<(u32, usize)> = vec![(0, 1), (0, 2)];
        topologies.extend(t.stable.keys().copied());
        let mut rows = vec![];
        for (g, n) in topologies {
            for ls in perimeter_vectors(n, maxp) {
                let v = t.stuffed_map_coeffs(g, &ls).map_err(|e| format!("btr Q: {e}"))?;
                let p: Vec<String> = ls.iter().map(|l| l.to_string()).collect();
                rows.push(vec![g.to_string(), n.to_string(), p.join(" "), fmt_f64(v)]);
            }
        }
        let forms: Vec<Value> = t
            .stable
            .iter()
            .map(|((g, n), f)| {
                json!({"g": g, "n": n, "truncation": t.truncation.get(&(*g, *n)), "asymmetry": f.asymmetry(), "terms": form_json(f)})
            })
            .collect();
        let mut out = StageOutput::new(Stage::Btr);
        out.files.insert("q_table.csv".into(), csv("g,n,perimeters,value", rows));
        out.json("btr.json", &json!({"config": t.config, "forms": forms}));
        Ok(out)
    }

    fn sde_check(&self) -> Res<StageOutput> {
        let t = self.table()?;
        let probes = self.cfg.checks.probes;
        let mut out = StageOutput::new(Stage::SdeCheck);
        let mut rows = vec![];
        let mut topologies = vec![(0u32, 1usize), (0, 2)];
        topologies.extend(t.stable.keys().copied());
        for (g, n) in topologies {
            match t.sde_residual(g, n, &OmegaTable::exterior_probes(probes, n)) {
                Ok(r) => {
                    rows.push(json!({"g": g, "n": n, "residual": r}));
                    out.checks.push(Check::at_most(format!("loop equation ({g},{n})"), r, self.cfg.checks.sde_tol));
                }
                // the rank-n equation may need a topology beyond the configured table
                Err(e) => rows.push(json!({"g": g, "n": n, "skipped": e.to_string()})),
            }
        }
        out.json("sde_check.json", &json!(rows));
        Ok(out)
    }

    fn t_check(&self) -> Res<StageOutput> {
        let t = self.table()?;
        let probes = self.cfg.checks.probes;
        let mut out = StageOutput::new(Stage::TCheck);
        let mut rows = vec![];
        for &(g, n) in t.stable.keys() {
            let r = t.t_operator_residual(g, n, &t.contour_probes(probes, n)).map_err(|e| format!("t-check: {e}"))?;
            rows.push(json!({"g": g, "n": n, "residual": r}));
            out.checks.push(Check::at_most(format!("T-operator ({g},{n})"), r, self.cfg.checks.t_tol));
        }
        out.json("t_check.json", &json!(rows));
        Ok(out)
    }

    fn sample(&self) -> Res<StageOutput> {
        let c = self.curve()?;
        let s = metropolis_run(&self.cfg.model, &self.cfg.sample).map_err(|e| format!("sample: {e}"))?;
        let rep = compare_density(&s, c, self.cfg.checks.histogram_bins).map_err(|e| format!("sample: {e}"))?;
        let moments: Vec<Value> = s
            .moments
            .iter()
            .map(|m| json!({"order": m.order, "estimate": m.mean, "std_error": m.std_error, "predicted": c.moment(m.order)}))
            .collect();
        let mut out = StageOutput::new(Stage::Sample);
        out.json(
            "manifest.json",
            &json!({"model": self.cfg.model, "sample": self.cfg.sample, "seed": self.cfg.sample.seed, "build": crate::version()}),
        );
        out.json(
            "sample.json",
            &json!({
                "acceptance_rate": s.acceptance_rate, "retained": s.eigenvalues.len(), "moments": moments,
                "ks": rep.ks, "outside_fraction": rep.outside_fraction, "support_flag": rep.support_flag,
            }),
        );
        let rows = rep.histogram.iter().map(|(x, e, p)| vec![fmt_f64(*x), fmt_f64(*e), fmt_f64(*p)]);
        out.files.insert("histogram.csv".into(), csv("s,empirical,phi", rows));
        out.checks.push(Check::at_most("KS distance to phi/t", rep.ks, self.cfg.checks.ks_tol));
        if let Some(m2) = s.moment(2) {
            let z = (m2.mean - c.moment(2)).abs() / m2.std_error;
            out.checks.push(Check::at_most("m2 deviation in standard errors", z, 3.0));
        }
        Ok(out)
    }
}

/// Markdown summary of several stage outputs.
pub fn report(outputs: &[StageOutput], version: &str) -> String {
    let mut md = String::new();
    let failed = outputs.iter().flat_map(|o| &o.checks).filter(|c| !c.pass).count();
    let total: usize = outputs.iter().map(|o| o.checks.len()).sum();
    let _ = writeln!(md, "# btrengine report\n\nversion: {version}\n\n{} of {total} checks passed.\n", total - failed);
    for o in outputs {
        let _ = writeln!(md, "## {}\n", o.stage);
        if !o.checks.is_empty() {
            let _ = writeln!(md, "| check | value | bound | result |\n|---|---|---|---|");
            for c in &o.checks {
                let verdict = if c.pass { "pass" } else { "FAIL" };
                let _ = writeln!(md, "| {} | {} | {} | {verdict} |", c.name, fmt_f64(c.value), c.bound);
            }
            md.push('\n');
        }
        let files: Vec<&str> = o.files.keys().map(|s| s.as_str()).collect();
        let _ = writeln!(md, "files: {}\n", files.join(", "));
    }
    md
}
