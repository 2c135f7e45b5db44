//! Command implementations. Each writes its tables under the output
//! directory and returns human-readable summary lines.

use std::path::{Path, PathBuf};

use idslab_core::ensemble::{run_ensemble, EnsembleSpec, PipelineSelector};
use idslab_core::ids::{
    convergence_study, default_energy_window, energy_grid, interacting_ids, lemma_agreement, noninteracting_ids,
    noninteracting_ids_direct, noninteracting_ids_direct_on_grid, single_particle_ids, study_grid, ConvergenceReport,
    ModelConfig, StudyOptions,
};
use idslab_core::lattice::BoxSpec;
use idslab_core::spectral::CountingFunction;
use idslab_core::Execution;

use crate::config::ExperimentConfig;
use crate::output::{write_table, Table};
use crate::{io_err, CliError, Command};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
}

pub const COUNT_COLUMNS: [&str; 3] = ["energy[E]", "normalized_count[L^-nd]", "raw_count[1]"];

struct Ctx<'a> {
    command: Command,
    config: &'a ExperimentConfig,
    model: ModelConfig,
    hash: String,
    out: &'a Path,
    summary: Summary,
}

impl Ctx<'_> {
    fn header(&self, spec: &BoxSpec, columns: &[&str]) -> Table {
        Table::new(columns)
            .title(format!("idslab {}", self.command.name()))
            .meta("config_hash", &self.hash)
            .meta("L", spec.side())
            .meta("m", spec.points_per_axis())
            .meta("n", spec.n())
            .meta("dim", spec.dim())
            .meta("normalization", spec.volume())
    }

    fn write(&mut self, stem: &str, table: &Table) -> Result<(), CliError> {
        let files = write_table(self.out, stem, table, &self.config.output.formats).map_err(io_err(self.out))?;
        self.summary.files.extend(files);
        Ok(())
    }

    fn study_options(&self) -> StudyOptions {
        StudyOptions {
            sides: self.config.run.sides.clone(),
            epsilons: self.config.run.epsilon.clone(),
            window: self.config.run.window.map(|[lo, hi]| (lo, hi)),
            grid_points: self.config.run.grid_points,
        }
    }
}

fn count_rows(table: &mut Table, energies: &[f64], raw: &[f64], normalization: f64) {
    for (e, r) in energies.iter().zip(raw) {
        table.push(vec![e.to_string(), (r / normalization).to_string(), r.to_string()]);
    }
}

/// Counting function at its own breakpoints.
fn breakpoint_table(ctx: &Ctx, spec: &BoxSpec, f: &CountingFunction) -> Table {
    let mut t = ctx.header(spec, &COUNT_COLUMNS);
    count_rows(&mut t, f.breakpoints(), f.raw_counts(), f.normalization());
    t
}

/// Counting function sampled on an energy grid.
fn grid_table(ctx: &Ctx, spec: &BoxSpec, grid: &[f64], f: &CountingFunction) -> Table {
    let raw: Vec<f64> = grid.iter().map(|&e| f.raw_value(e)).collect();
    let mut t = ctx.header(spec, &COUNT_COLUMNS);
    count_rows(&mut t, grid, &raw, f.normalization());
    t
}

pub fn dispatch(command: Command, config: &ExperimentConfig, out: &Path) -> Result<Summary, CliError> {
    let exec = if Execution::parallel_available() {
        Execution::Parallel
    } else {
        Execution::Serial
    };
    let mut ctx = Ctx {
        command,
        config,
        model: config.model_config(exec),
        hash: config.hash(),
        out,
        summary: Summary::default(),
    };
    match command {
        Command::Ids1 => ids1(&mut ctx)?,
        Command::Idsn => idsn(&mut ctx)?,
        Command::Interact => interact(&mut ctx)?,
        Command::Converge => converge(&mut ctx)?,
        Command::Verify => crate::verify::run_suites(&mut ctx.summary, config, out)?,
    }
    Ok(ctx.summary)
}

fn ids1(ctx: &mut Ctx) -> Result<(), CliError> {
    let mut first_window = None;
    for &side in &ctx.config.run.sides {
        let single = single_particle_ids(&ctx.model, side)?;
        first_window.get_or_insert(default_energy_window(&single.counting)?);
        let table = breakpoint_table(ctx, &single.spec, &single.counting);
        ctx.write(&format!("ids1_L{side}"), &table)?;
        ctx.summary.lines.push(format!(
            "ids1 L={side} m={} eigenvalues={} lowest={}",
            single.spec.points_per_axis(),
            single.eigenvalues.len(),
            single.eigenvalues[0]
        ));
    }

    let realizations = ctx.config.run.realizations;
    if realizations > 1 {
        let window = match ctx.config.run.window {
            Some([lo, hi]) => (lo, hi),
            None => first_window.expect("at least one box size"),
        };
        let grid = energy_grid(window, ctx.config.run.grid_points)?;
        let spec = EnsembleSpec {
            model: ctx.model.clone(),
            realizations,
            master_seed: ctx.config.run.seed,
        };
        for &side in &ctx.config.run.sides {
            let result = run_ensemble(&spec, side, &PipelineSelector::SingleParticle, &grid)?;
            let box_spec = ctx.model.box_spec(side, 1)?;
            let mut table = ctx
                .header(
                    &box_spec,
                    &["energy[E]", "mean[L^-d]", "variance[L^-2d]", "variance_of_mean[L^-2d]"],
                )
                .meta("realizations", realizations)
                .meta("survivors", result.survivors);
            let vom = result.variance_of_mean();
            for k in 0..grid.len() {
                table.push(vec![
                    grid[k].to_string(),
                    result.mean[k].to_string(),
                    result.variance[k].to_string(),
                    vom[k].to_string(),
                ]);
            }
            for (index, seed, err) in &result.failures {
                table
                    .footer
                    .push(format!("excluded realization={index} seed={seed}: {err}"));
            }
            ctx.write(&format!("ids1_ensemble_L{side}"), &table)?;
            ctx.summary.lines.push(format!(
                "ids1 ensemble L={side} realizations={realizations} survivors={}",
                result.survivors
            ));
        }
    }
    Ok(())
}

fn idsn(ctx: &mut Ctx) -> Result<(), CliError> {
    let n = ctx.model.n;
    let (_, grid) = study_grid(&ctx.model, &ctx.study_options())?;
    let merge_tol = ctx.model.convolution.merge_tol;
    let mut report = Vec::new();
    let mut all_exact = true;
    for &side in &ctx.config.run.sides {
        let spec = ctx.model.box_spec(side, n)?;
        let conv = noninteracting_ids(&ctx.model, side, n)?;
        let table = breakpoint_table(ctx, &spec, &conv.function);
        ctx.write(&format!("idsn_conv_L{side}"), &table)?;
        let table = grid_table(ctx, &spec, &grid, &conv.function);
        ctx.write(&format!("idsn_grid_L{side}"), &table)?;

        let (mode, agreement) = if spec.dim() <= ctx.model.dense_cap {
            let direct = noninteracting_ids_direct(&ctx.model, side, n)?;
            let table = breakpoint_table(ctx, &spec, &direct);
            ctx.write(&format!("idsn_direct_L{side}"), &table)?;
            ("breakpoints", lemma_agreement(&conv.function, &direct, merge_tol))
        } else {
            // too large for the dense oracle: compare on the grid only
            let direct = noninteracting_ids_direct_on_grid(&ctx.model, side, n, &grid)?;
            let table = grid_table(ctx, &spec, &grid, &direct);
            ctx.write(&format!("idsn_direct_L{side}"), &table)?;
            let sampled = CountingFunction::new(
                grid.clone(),
                grid.iter().map(|&e| conv.function.raw_value(e)).collect(),
                spec.volume(),
            )?;
            ("grid", lemma_agreement(&sampled, &direct, 0.0))
        };
        let binned = conv.bin_width.is_some();
        let exact = agreement.exact() && !binned;
        all_exact &= exact;
        report.push(format!(
            "L={side} m={} dim={} compared={mode} clusters={} mismatches={} max_raw_diff={} binned={binned} agreement: {}",
            spec.points_per_axis(),
            spec.dim(),
            agreement.clusters,
            agreement.mismatches,
            agreement.max_raw_diff,
            if exact { "exact" } else { "mismatch" }
        ));
    }
    report.push(format!("agreement: {}", if all_exact { "exact" } else { "mismatch" }));
    let mut text = format!("# idslab idsn config_hash={}\n", ctx.hash);
    for line in &report {
        text.push_str(line);
        text.push('\n');
    }
    let path = ctx.out.join("idsn_agreement.txt");
    crate::output::write_atomic(&path, text.as_bytes()).map_err(io_err(&path))?;
    ctx.summary.files.push(path);
    ctx.summary.lines.extend(report);
    Ok(())
}

fn interact(ctx: &mut Ctx) -> Result<(), CliError> {
    let n = ctx.model.n;
    let kernel = ctx.config.kernel();
    let (_, grid) = study_grid(&ctx.model, &ctx.study_options())?;
    for &side in &ctx.config.run.sides {
        let spec = ctx.model.box_spec(side, n)?;
        let f = interacting_ids(&ctx.model, side, n, &kernel, &grid)?;
        let table = grid_table(ctx, &spec, &grid, &f);
        ctx.write(&format!("interact_L{side}"), &table)?;
        ctx.summary.lines.push(format!(
            "interact L={side} dim={} count_at_top={}",
            spec.dim(),
            f.total_raw_mass()
        ));
    }
    Ok(())
}

fn converge(ctx: &mut Ctx) -> Result<(), CliError> {
    let kernel = ctx.config.kernel();
    let report = convergence_study(&ctx.model, &kernel, &ctx.study_options())?;
    write_convergence(ctx, &report)?;
    match report.failure {
        Some(err) => Err(err.into()),
        None => Ok(()),
    }
}

fn write_convergence(ctx: &mut Ctx, report: &ConvergenceReport) -> Result<(), CliError> {
    let n = ctx.model.n;
    let eps = &ctx.config.run.epsilon;
    let mut columns: Vec<String> = ["L[L]", "m[1]", "dim[1]", "sup_diff[L^-nd]", "max_raw_excess[1]"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for e in eps {
        columns.push(format!("support_fraction_eps{e}[1]"));
        columns.push(format!("scaled_constant_eps{e}[L^d]"));
    }
    let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut table = Table::new(&column_refs)
        .title("idslab converge")
        .meta("config_hash", &ctx.hash)
        .meta("n", n)
        .meta("window", format!("[{},{}]", report.window.0, report.window.1))
        .meta("grid_points", report.grid.len());
    for r in &report.records {
        let mut row = vec![
            r.side.to_string(),
            r.m.to_string(),
            r.dim.to_string(),
            r.sup_diff.to_string(),
            r.max_raw_excess.to_string(),
        ];
        for s in &r.support {
            row.push(s.fraction.to_string());
            row.push(s.scaled_constant.to_string());
        }
        table.push(row);
    }
    match report.exponent {
        Some(x) => table.footer.push(format!("exponent={x}")),
        None => table.footer.push("exponent=none".into()),
    }
    table.footer.push(format!("complete={}", report.complete));
    if let Some(err) = &report.failure {
        table.footer.push(format!("failure={err}"));
    }
    ctx.write("converge_report", &table)?;

    for r in &report.records {
        let spec = ctx.model.box_spec(r.side, n)?;
        let mut t = ctx.header(
            &spec,
            &[
                "energy[E]",
                "interacting_normalized[L^-nd]",
                "noninteracting_normalized[L^-nd]",
                "interacting_raw[1]",
                "noninteracting_raw[1]",
            ],
        );
        let vol = spec.volume();
        for (k, e) in report.grid.iter().enumerate() {
            let a = r.interacting.raw_counts()[k];
            let b = r.noninteracting.raw_counts()[k];
            t.push(vec![
                e.to_string(),
                (a / vol).to_string(),
                (b / vol).to_string(),
                a.to_string(),
                b.to_string(),
            ]);
        }
        ctx.write(&format!("converge_curves_L{}", r.side), &t)?;
        ctx.summary.lines.push(format!(
            "converge L={} m={} dim={} sup_diff={} max_raw_excess={}",
            r.side, r.m, r.dim, r.sup_diff, r.max_raw_excess
        ));
    }
    ctx.summary.lines.push(match report.exponent {
        Some(x) => format!("converge exponent={x}"),
        None => "converge exponent=none".into(),
    });
    Ok(())
}
