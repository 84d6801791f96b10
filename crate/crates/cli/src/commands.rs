//! One function per subcommand. Each writes its tables into the output directory.

use std::path::Path;

use nvq_core::blocks::{enumerate_blocks, total_dimension, Sizes};
use nvq_core::cycles::{
    efficiency_grid, max_eta_by_coordinates, max_eta_by_temperatures, CachedSurface, CycleKind, GridRanges,
    ModelSurface, StateSurface,
};
use nvq_core::model::{fit_rescaling, rescale, ModelParams};
use nvq_core::numerics::{linspace, par_map};
use nvq_core::oracle::{
    block_counts, block_spectrum_multiset, casimir_counts, fock_expectation, fock_operators, fock_partition,
    fock_spectrum, multiset_distance,
};
use nvq_core::spectral::{find_eps, first_eps_about_unity, ground_state_info, SpectrumSet, Sweep, SweepParam};
use nvq_core::stability::{spinodal_analysis, Isotherm};
use nvq_core::thermo::{ensemble, gap_from_expectation, Ensemble, GapOperator};

use crate::config::RunConfig;
use crate::table::{Cell, TableWriter};
use crate::{Command, Failure};

pub fn dispatch(cmd: &Command, cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    match cmd {
        Command::Spectrum(_) => spectrum(cfg, out),
        Command::Eps(_) => eps(cfg, out),
        Command::TcMap(_) => tc_map(cfg, out),
        Command::Thermo(_) => thermo(cfg, out),
        Command::Spinodal(_) => spinodal(cfg, out),
        Command::Cycle { .. } => cycle(cfg, out),
        Command::RescaleFit => rescale_fit(cfg, out),
        Command::OracleCheck => oracle_check(cfg, out),
        Command::BlocksDump => blocks_dump(cfg, out),
    }
}

fn spectrum(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let p = cfg.model()?;
    let opts = cfg.spectral()?;
    let alphas = cfg.grid("grid.alpha")?;
    let sets = par_map(&alphas, |&a| SpectrumSet::new(&p.with_alpha(a), false, &opts));
    let mut levels = TableWriter::new(
        "spectrum",
        &["alpha", "twice_S", "twice_s1", "twice_s2", "twice_m", "weight", "re_E", "im_E"],
    );
    let mut summary =
        TableWriter::new("spectrum summary", &["alpha", "ground_re", "ground_im", "ground_complex", "max_abs_im"]);
    for (&a, set) in alphas.iter().zip(sets) {
        let set = set?;
        for spec in &set.spectra {
            let mut rows: Vec<(i64, f64, f64)> = spec
                .eigenvalues
                .iter()
                .zip(&spec.qubit_m)
                .map(|(e, m)| ((2.0 * m).round() as i64, e.re, e.im))
                .collect();
            rows.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)).then(x.2.total_cmp(&y.2)));
            for (m2, re, im) in rows {
                levels.row(vec![
                    a.into(),
                    spec.key.s.twice().into(),
                    spec.key.s1.twice().into(),
                    spec.key.s2.twice().into(),
                    m2.into(),
                    spec.total_mult().into(),
                    re.into(),
                    im.into(),
                ]);
            }
        }
        let g = ground_state_info(&set.spectra, &opts)?;
        summary.row(vec![a.into(), g.energy.re.into(), g.energy.im.into(), g.is_complex.into(), set.max_abs_imag().into()]);
    }
    levels.write(out, "spectrum.tsv", cfg)?;
    summary.write(out, "spectrum_summary.tsv", cfg)
}

fn eps(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let p = cfg.model()?;
    let opts = cfg.spectral()?;
    let range = cfg.grid("eps.range")?;
    let precision = cfg.f64("eps.precision")?;
    let sweep = Sweep {
        param: cfg.sweep_param()?,
        lo: range[0],
        hi: range[range.len() - 1],
        coarse_steps: range.len().saturating_sub(1),
    };
    let found = find_eps(&p, &sweep, precision, &opts)?;
    let mut t = TableWriter::new(
        "exceptional points",
        &["param", "value", "bracket_lo", "bracket_hi", "twice_S", "twice_s1", "twice_s2", "twice_m", "re_E"],
    );
    for e in &found {
        t.row(vec![
            e.param.name().into(),
            e.value.into(),
            e.bracket.0.into(),
            e.bracket.1.into(),
            e.key.s.twice().into(),
            e.key.s1.twice().into(),
            e.key.s2.twice().into(),
            e.twice_qubit_m.into(),
            e.re_energy.into(),
        ]);
    }
    t.write(out, "eps.tsv", cfg)?;

    let g_grid = cfg.grid("grid.g")?;
    let table = first_eps_about_unity(
        &p,
        &g_grid,
        (0.0, cfg.f64("eps.alpha_max")?),
        cfg.f64("eps.step")?,
        precision,
        &opts,
    )?;
    let mut rows = TableWriter::new("first exceptional points about alpha = 1", &["g", "alpha_below", "alpha_above"]);
    for r in &table.rows {
        rows.row(vec![r.coupling.into(), r.alpha_below.into(), r.alpha_above.into()]);
    }
    rows.write(out, "eps_about_unity.tsv", cfg)?;
    let mut fit = TableWriter::new("first exceptional point statistics", &["quantity", "value"]);
    fit.row(vec!["below_upper_half_spread".into(), table.below_upper_half_spread.into()]);
    fit.row(vec!["above_slope".into(), table.above_fit.map(|f| f.slope).into()]);
    fit.row(vec!["above_intercept".into(), table.above_fit.map(|f| f.intercept).into()]);
    fit.row(vec!["above_r_squared".into(), table.above_fit.map(|f| f.r_squared).into()]);
    fit.write(out, "eps_about_unity_fit.tsv", cfg)
}

fn tc_map(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let p = cfg.model()?;
    let opts = cfg.spectral()?;
    let gs = cfg.grid("grid.g")?;
    let alphas = cfg.grid("grid.alpha")?;
    let points: Vec<(f64, f64)> = gs.iter().flat_map(|&g| alphas.iter().map(move |&a| (g, a))).collect();
    let rows = par_map(&points, |&(g, a)| -> nvq_core::Result<Vec<Cell>> {
        let q = p.with_coupling(g).with_alpha(a);
        let set = SpectrumSet::new(&q, false, &opts)?;
        let ens = Ensemble::from_spectra(&set, None)?;
        let tc = ens.critical_temperature(&opts)?;
        let ground = ground_state_info(&set.spectra, &opts)?;
        Ok(vec![
            g.into(),
            a.into(),
            tc.into(),
            (tc / p.d).into(),
            ground.energy.re.into(),
            ground.energy.im.into(),
            ground.is_complex.into(),
            ens.max_gamma().into(),
        ])
    });
    let mut t = TableWriter::new(
        "critical temperature",
        &["g", "alpha", "T_c", "T_c_r", "ground_re", "ground_im", "ground_complex", "gamma_max"],
    );
    for r in rows {
        t.row(r?);
    }
    t.write(out, "tc_map.tsv", cfg)
}

fn thermo(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let base = cfg.model()?;
    let opts = cfg.spectral()?;
    let gap = cfg.gap()?;
    let alphas = cfg.grid("grid.alpha")?;
    let temps = cfg.grid("grid.T")?;
    let counts = cfg.int_list("thermo.nv_counts")?;
    // without explicit counts the configured system is used unscaled
    let systems: Vec<(i64, ModelParams)> = if counts.is_empty() {
        vec![(base.sizes.n_nv(), base)]
    } else {
        counts
            .iter()
            .map(|&n| -> Result<(i64, ModelParams), Failure> {
                let sizes = Sizes::new(nvq_core::HalfInt::from_twice(n), base.sizes.omega1, base.sizes.omega2)?;
                let r = rescale(&base, base.sizes.omega1, n, 1.0, None)?;
                Ok((n, ModelParams { e: r.e, coupling: r.coupling, sizes, ..base }))
            })
            .collect::<Result<_, _>>()?
    };
    let jobs: Vec<(i64, ModelParams, f64)> =
        systems.iter().flat_map(|&(n, p)| alphas.iter().map(move |&a| (n, p, a))).collect();
    let rows = par_map(&jobs, |&(n, p, a)| -> nvq_core::Result<Vec<Vec<Cell>>> {
        let q = p.with_alpha(a);
        let ens = ensemble(&q, Some(gap), &opts)?;
        let mut out = Vec::with_capacity(temps.len());
        for &t in &temps {
            let row = match ens.potentials(t) {
                Ok(pt) => {
                    let g = if pt.valid() {
                        ens.thermal_expectation(t).ok().and_then(|(o, _)| gap_from_expectation(q.pairing, o).ok())
                    } else {
                        None
                    };
                    vec![
                        n.into(),
                        a.into(),
                        t.into(),
                        (t / q.d).into(),
                        (pt.z_sign as i64).into(),
                        pt.ln_abs_z.into(),
                        pt.f.into(),
                        pt.u.into(),
                        pt.s.into(),
                        pt.cv.into(),
                        g.into(),
                        pt.valid().into(),
                    ]
                }
                Err(_) => {
                    let mut r: Vec<Cell> = vec![n.into(), a.into(), t.into(), (t / q.d).into(), 0i64.into()];
                    r.extend((0..6).map(|_| Cell::Float(f64::NAN)));
                    r.push(false.into());
                    r
                }
            };
            out.push(row);
        }
        Ok(out)
    });
    let mut t = TableWriter::new(
        "thermodynamic potentials",
        &["n_nv", "alpha", "T", "T_r", "z_sign", "ln_abs_z", "F", "U", "S", "C_V", "gap", "valid"],
    );
    for block in rows {
        for r in block? {
            t.row(r);
        }
    }
    t.write(out, "thermo.tsv", cfg)
}

fn spinodal(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let p = cfg.model()?;
    let opts = cfg.spectral()?;
    let alphas = cfg.grid("grid.alpha")?;
    let temps = cfg.grid("grid.T")?;
    let surface = CachedSurface::new(ModelSurface::new(p, opts), &alphas)?;
    let mut curves = TableWriter::new("free-energy isotherms", &["T", "T_r", "alpha", "F", "valid"]);
    let mut features =
        TableWriter::new("isotherm features", &["T", "T_r", "feature", "lo", "hi", "value", "stable"]);
    for &t in &temps {
        let states = alphas.iter().map(|&a| surface.state(t, a)).collect::<nvq_core::Result<Vec<_>>>()?;
        for s in &states {
            curves.row(vec![t.into(), (t / p.d).into(), s.alpha.into(), s.f.into(), s.valid.into()]);
        }
        let iso = Isotherm::new(t, alphas.clone(), states.iter().map(|s| s.f).collect(), states.iter().map(|s| s.valid).collect())?;
        let res = match spinodal_analysis(&iso) {
            Ok(r) => r,
            // too few valid points: nothing to classify at this temperature
            Err(nvq_core::Error::InvalidArgument(_)) => continue,
            Err(e) => return Err(e.into()),
        };
        let mut push = |kind: &str, lo: f64, hi: f64, v: f64| {
            features.row(vec![t.into(), (t / p.d).into(), kind.into(), lo.into(), hi.into(), v.into(), res.stable.into()]);
        };
        for (&a, &f) in res.minima.iter().zip(&res.minima_f) {
            push("minimum", a, a, f);
        }
        for &a in &res.inflections {
            push("inflection", a, a, f64::NAN);
        }
        for b in &res.binodals {
            push("binodal", b.interval.lo, b.interval.hi, b.pressure);
            if let Some(s) = b.spinodal {
                push("spinodal", s.lo, s.hi, f64::NAN);
            }
            for m in &b.metastable {
                push("metastable", m.lo, m.hi, f64::NAN);
            }
        }
        for i in &res.indeterminate {
            push("indeterminate", i.lo, i.hi, f64::NAN);
        }
    }
    curves.write(out, "spinodal_isotherms.tsv", cfg)?;
    features.write(out, "spinodal_features.tsv", cfg)
}

fn cycle(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let p = cfg.model()?;
    let opts = cfg.spectral()?;
    let kind = cfg.cycle_kind()?;
    let temps = cfg.grid("grid.T")?;
    let bracket = cfg.range("cycle.bracket")?;
    let scan_steps = cfg.usize("cycle.scan_steps")?;
    let model = ModelSurface::new(p, opts);
    let (coordinates, cached) = match kind {
        CycleKind::Carnot => (cfg.grid("grid.S")?, linspace(bracket.0, bracket.1, scan_steps)),
        CycleKind::Stirling => {
            let mut alphas = cfg.grid("grid.alpha")?;
            if alphas[0] <= 0.0 {
                return Err(Failure::request("Stirling cycles need alpha > 0 on the whole grid".into()));
            }
            if cfg.bool("cycle.include_eps")? && alphas.len() > 1 {
                let sweep = Sweep {
                    param: SweepParam::Alpha,
                    lo: alphas[0],
                    hi: alphas[alphas.len() - 1],
                    coarse_steps: 4 * alphas.len(),
                };
                let eps = find_eps(&p, &sweep, cfg.f64("eps.precision")?, &opts)?;
                alphas.extend(eps.iter().map(|e| e.value));
                alphas.sort_by(f64::total_cmp);
                alphas.dedup();
            }
            (alphas.clone(), alphas)
        }
    };
    let surface = CachedSurface::new(model, &cached)?;
    let ranges = GridRanges { temperatures: temps, coordinates, bracket, scan_steps };
    let cells = efficiency_grid(&surface, kind, &ranges)?;
    let (x1, x2) = match kind {
        CycleKind::Carnot => ("S1", "S2"),
        CycleKind::Stirling => ("alpha1", "alpha2"),
    };
    let mut t = TableWriter::new(
        "cycle efficiency grid",
        &[
            "T1", "T2", x1, x2, "feasible", "eta", "eta_classical", "delta_eta", "cop", "r_alpha", "w_total", "q_in",
            "q_out", "energy_residual", "entropy_residual", "degenerate", "zero_region", "produces_work", "reason",
        ],
    );
    let mut feasible = 0;
    for c in &cells {
        let mut row: Vec<Cell> = vec![c.t1.into(), c.t2.into(), c.x1.into(), c.x2.into(), c.feasible().into()];
        match &c.result {
            Ok(r) => {
                feasible += 1;
                row.extend([
                    r.eta.into(),
                    r.eta_classical.into(),
                    (r.eta - r.eta_classical).into(),
                    r.cop.into(),
                    r.r_alpha.into(),
                    r.w_total.into(),
                    r.q_in.into(),
                    r.q_out.into(),
                    r.energy_residual.into(),
                    r.entropy_residual.into(),
                    r.degenerate.into(),
                    r.touches_zero_region.into(),
                    r.produces_work.into(),
                    "".into(),
                ]);
            }
            Err(e) => {
                row.extend((0..10).map(|_| Cell::Float(f64::NAN)));
                row.extend([false.into(), false.into(), false.into(), e.as_str().into()]);
            }
        }
        t.row(row);
    }
    t.write(out, "cycle_cells.tsv", cfg)?;
    let mut by_t = TableWriter::new("max efficiency per temperature pair", &["T1", "T2", "eta_max"]);
    for ((a, b), e) in max_eta_by_temperatures(&cells) {
        by_t.row(vec![a.into(), b.into(), e.into()]);
    }
    by_t.write(out, "cycle_max_by_temperatures.tsv", cfg)?;
    let mut by_x = TableWriter::new("max efficiency per coordinate pair", &[x1, x2, "eta_max"]);
    for ((a, b), e) in max_eta_by_coordinates(&cells) {
        by_x.row(vec![a.into(), b.into(), e.into()]);
    }
    by_x.write(out, "cycle_max_by_coordinates.tsv", cfg)?;
    if feasible == 0 {
        return Err(Failure::request(format!("no feasible cycle among {} cells", cells.len())));
    }
    Ok(())
}

fn rescale_fit(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let p = cfg.model()?;
    let opts = cfg.spectral()?;
    let np = cfg.int_list("rescale.np")?;
    if np.is_empty() {
        return Err(Failure::request("rescale.np is empty".into()));
    }
    let fit = fit_rescaling(
        &p,
        &np,
        cfg.f64("rescale.G0")?,
        cfg.f64("rescale.target")?,
        cfg.f64("rescale.T")?,
        cfg.gap()?,
        &opts,
    )?;
    let mut t = TableWriter::new("rescaling fit points", &["n_pairs", "G", "ratio", "fitted", "residual"]);
    for pt in &fit.points {
        t.row(vec![pt.n_pairs.into(), pt.pairing.into(), pt.ratio.into(), fit.factor(pt.n_pairs).into(), pt.residual.into()]);
    }
    t.write(out, "rescale_fit.tsv", cfg)?;
    let mut c = TableWriter::new("rescaling coefficients f(N_p) = a/(2 N_p + b)", &["a", "b"]);
    c.row(vec![fit.a.into(), fit.b.into()]);
    c.write(out, "rescale_coefficients.tsv", cfg)
}

fn oracle_check(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let p = cfg.model()?;
    let opts = cfg.spectral()?;
    let tol = cfg.f64("oracle.tol")?;
    let betas = cfg.grid("oracle.beta")?;
    let mut t = TableWriter::new("oracle comparison", &["check", "beta", "value", "tolerance", "pass"]);
    let mut failures = 0;
    let mut record = |t: &mut TableWriter, name: &str, beta: f64, value: f64, tol: f64| {
        let pass = value <= tol;
        if !pass {
            failures += 1;
        }
        t.row(vec![name.into(), beta.into(), value.into(), tol.into(), pass.into()]);
    };
    let fock = fock_spectrum(&p)?;
    let blocks = block_spectrum_multiset(&p)?;
    record(&mut t, "spectrum_distance", f64::NAN, multiset_distance(&fock, &blocks), tol);
    let counts_match = casimir_counts(p.sizes)? == block_counts(p.sizes)?;
    record(&mut t, "sector_dimensions", f64::NAN, if counts_match { 0.0 } else { 1.0 }, 0.0);
    let ens = ensemble(&p, Some(GapOperator::Collective), &opts)?;
    let ops = fock_operators(&p)?;
    let correlator = ops.pair_correlator();
    for &beta in &betas {
        let z = ens.partition_function(beta);
        let zf = fock_partition(&p, beta)?;
        let rel = if zf.signum() == z.sign as f64 { (zf.abs().ln() - z.ln_abs).exp_m1().abs() } else { f64::INFINITY };
        record(&mut t, "partition_function", beta, rel, tol);
        if z.sign > 0 {
            let (blk, _) = ens.thermal_expectation(1.0 / beta)?;
            let fk = fock_expectation(&correlator, &p, beta)?;
            record(&mut t, "pair_correlator", beta, (blk - fk).abs() / fk.abs().max(1.0), tol);
        }
    }
    t.write(out, "oracle_check.tsv", cfg)?;
    if failures > 0 {
        return Err(Failure::internal(format!("{failures} oracle check(s) failed")));
    }
    Ok(())
}

fn blocks_dump(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let sizes = cfg.sizes()?;
    let blocks = enumerate_blocks(sizes)?;
    let mut t = TableWriter::new(
        "blocks",
        &["N", "twice_tau", "k", "twice_S", "twice_s1", "twice_s2", "dim", "mult"],
    );
    for b in &blocks {
        t.row(vec![
            b.nv.n.into(),
            b.nv.tau.twice().into(),
            b.nv.k.into(),
            b.nv.s.twice().into(),
            b.qb.s1.twice().into(),
            b.qb.s2.twice().into(),
            b.dim.into(),
            b.mult.into(),
        ]);
    }
    t.write(out, "blocks.tsv", cfg)?;
    let mut s = TableWriter::new("block completeness", &["blocks", "total_dimension", "log2_fock_dimension"]);
    s.row(vec![blocks.len().into(), total_dimension(&blocks).to_string().into(), sizes.log2_dimension().into()]);
    s.write(out, "blocks_total.tsv", cfg)
}

