use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use cornea_core::data::{generate_synthetic, read_mesh, write_mesh, SynthSpec};
use cornea_core::fit::{
    axial_distance_map, axial_error_values, axial_errors, fit_error_grid, fit_mesh, ApexMeasurements,
    DomainEllipse, FitOptions, FitResult, SurfaceSource,
};
use cornea_core::kernel::{admissibility, bound_constants, lemma_b_max, theorem1_b_max, ModelParams};
use cornea_core::solver::{h0_value, solve as solve_profile, RadialGrid, SolveOptions};
use cornea_core::Error;

use crate::report::{fmt_f64, Report, ReportFile};
use crate::{AxialArgs, BoundsArgs, CalibrateArgs, FitArgs, SolveArgs, SynthArgs};

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn errors_path(explicit: &Option<PathBuf>, out: &Path) -> PathBuf {
    explicit.clone().unwrap_or_else(|| {
        let mut p = out.as_os_str().to_owned();
        p.push(".errors");
        PathBuf::from(p)
    })
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

pub fn solve(args: &SolveArgs) -> Result<Report> {
    let start = Instant::now();
    let params = ModelParams::new(args.a, args.b)?;
    let grid = RadialGrid::uniform(args.nodes)?;
    let adm = admissibility(&params);
    if !adm.theorem1_ok && !args.enforce_bound {
        eprintln!(
            "warning: b = {} is not below the contraction bound {} at a = {}; convergence is not guaranteed",
            args.b, adm.theorem1_b_max, args.a
        );
    }
    let opts = SolveOptions {
        tol: args.tol,
        max_iter: args.max_iter,
        enforce_bound: args.enforce_bound,
    };
    let rep = solve_profile(&params, &grid, &opts)?;

    if let Some(out) = &args.out {
        let mut csv = String::from("r,h,dh,h0,a_h1\n");
        let a_const = rep.envelope_constant_a;
        for (i, &r) in grid.nodes().iter().enumerate() {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                fmt_f64(r),
                fmt_f64(rep.profile.h[i]),
                fmt_f64(rep.profile.dh[i]),
                fmt_f64(h0_value(&params, r)),
                fmt_f64(a_const * rep.first_iterate.h[i]),
            );
        }
        write_text(out, &csv)?;
    }

    let bounds = bound_constants(&params);
    let mut r = Report::new("solve");
    r.num("a", args.a, "nondim")
        .num("b", args.b, "nondim")
        .count("nodes", args.nodes)
        .num("tol", args.tol, "nondim")
        .count("max_iter", args.max_iter)
        .flag("enforce_bound", args.enforce_bound);
    if let Some(out) = &args.out {
        r.text("profile_csv", out.display());
    }
    r.count("iterations", rep.iterations)
        .num("final_sup_diff", rep.final_sup_diff, "nondim");
    for (k, d) in rep.sup_diff_history.iter().enumerate() {
        r.num(&format!("sup_diff_{}_{}", k + 1, k), *d, "nondim");
    }
    r.num("residual_sup", rep.residual_sup, "nondim")
        .num("h_apex", rep.profile.h[0], "nondim")
        .num("h0_apex", h0_value(&params, 0.0), "nondim")
        .num("envelope_constant_a", rep.envelope_constant_a, "nondim");
    match rep.envelope_ok {
        Some(ok) => r.flag("envelope_ok", ok),
        None => r.text("envelope_ok", "not_applicable"),
    };
    r.num("q_bound", bounds.q_bound, "nondim")
        .num("r_bound", bounds.r_bound, "nondim")
        .num("contraction", bounds.contraction, "nondim")
        .num("theorem1_b_max", adm.theorem1_b_max, "nondim")
        .num("lemma_b_max", adm.lemma_b_max, "nondim")
        .flag("theorem1_ok", adm.theorem1_ok)
        .flag("lemma_ok", adm.lemma_ok)
        .num("timing", elapsed_ms(start), "ms");
    Ok(r)
}

pub fn bounds(args: &BoundsArgs) -> Result<Report> {
    let start = Instant::now();
    if !(args.a_min > 0.0 && args.a_min < args.a_max && args.a_max.is_finite()) {
        bail!(Error::Domain {
            op: "bounds",
            detail: format!("need 0 < a_min < a_max, got [{}, {}]", args.a_min, args.a_max),
        });
    }
    if args.samples < 2 {
        bail!(Error::Domain {
            op: "bounds",
            detail: format!("samples = {} must be at least 2", args.samples),
        });
    }
    let mut csv = String::from("a,theorem1_b_max,lemma_b_max\n");
    for k in 0..args.samples {
        let a = args.a_min + (args.a_max - args.a_min) * k as f64 / (args.samples - 1) as f64;
        let _ = writeln!(
            csv,
            "{},{},{}",
            fmt_f64(a),
            fmt_f64(theorem1_b_max(a)?),
            fmt_f64(lemma_b_max(a)?)
        );
    }
    write_text(&args.out, &csv)?;
    let mut r = Report::new("bounds");
    r.num("a_min", args.a_min, "nondim")
        .num("a_max", args.a_max, "nondim")
        .count("samples", args.samples)
        .text("bounds_csv", args.out.display())
        .num("timing", elapsed_ms(start), "ms");
    Ok(r)
}

pub fn calibrate(args: &CalibrateArgs) -> Result<Report> {
    let start = Instant::now();
    let m = ApexMeasurements::new(args.max_deflection, args.central_radius, args.scale_radius)?;
    let p = m.calibrate()?;
    let adm = admissibility(&p);
    let mut r = Report::new("calibrate");
    r.num("max_deflection", m.max_deflection, "mm")
        .num("central_radius", m.central_radius, "mm")
        .num("scale_radius", m.scale_radius, "mm")
        .num("a", p.a(), "nondim")
        .num("b", p.b(), "nondim")
        .flag("theorem1_ok", adm.theorem1_ok)
        .flag("lemma_ok", adm.lemma_ok)
        .num("timing", elapsed_ms(start), "ms");
    Ok(r)
}

pub fn synth(args: &SynthArgs) -> Result<Report> {
    let start = Instant::now();
    let spec = SynthSpec {
        params: ModelParams::new(args.a, args.b)?,
        scale_radius: args.scale_radius,
        ellipse: DomainEllipse::from_signed_ecc_sq(args.ecc_sq)?,
        noise_sigma: args.sigma,
        seed: args.seed,
        n_x: args.nx,
        n_y: args.ny,
    };
    let mesh = generate_synthetic(&spec)?;
    write_mesh(&mesh, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    let mut r = Report::new("synth");
    r.num("a", args.a, "nondim")
        .num("b", args.b, "nondim")
        .num("scale_radius", args.scale_radius, "mm")
        .num("signed_ecc_sq", args.ecc_sq, "nondim")
        .num("semi_axis_x", spec.ellipse.semi_axis_x, "nondim")
        .num("semi_axis_y", spec.ellipse.semi_axis_y, "nondim")
        .num("noise_sigma", args.sigma, "mm")
        .num("seed", args.seed as f64, "nondim")
        .count("nx", args.nx)
        .count("ny", args.ny)
        .num("spacing_x", mesh.spacing().0, "mm")
        .num("spacing_y", mesh.spacing().1, "mm")
        .count("valid_points", mesh.valid_count())
        .text("mesh", args.out.display())
        .num("timing", elapsed_ms(start), "ms");
    Ok(r)
}

fn fit_report(fit: &FitResult, mesh_path: &Path, errors: &Path, opts: &FitOptions, ms: f64) -> Report {
    let m = &fit.measurements;
    let mut r = Report::new("fit");
    r.text("mesh", mesh_path.display())
        .num("level_fraction", opts.level_fraction, "nondim")
        .num("apex_window", opts.apex_window, "nondim")
        .num("a", fit.params.a(), "nondim")
        .num("b", fit.params.b(), "nondim")
        .num("semi_axis_x", fit.ellipse.semi_axis_x, "nondim")
        .num("semi_axis_y", fit.ellipse.semi_axis_y, "nondim")
        .num("signed_ecc_sq", fit.ellipse.signed_ecc_sq, "nondim")
        .num("scale_radius", fit.scale_radius, "mm")
        .num("apex_x", fit.apex_x, "mm")
        .num("apex_y", fit.apex_y, "mm")
        .num("max_deflection", m.max_deflection, "mm")
        .num("central_radius", m.central_radius, "mm")
        .num("mean_abs_error", fit.mean_abs_error_mm, "mm")
        .num("mean_rel_error", fit.mean_rel_error, "nondim")
        .text("mean_error_summary", format!("{:.3} mm ({:.1}%)", fit.mean_abs_error_mm, 100.0 * fit.mean_rel_error))
        .num("axial_mean_abs_error", fit.axial_mean_abs_error_mm, "mm")
        .num("axial_mean_rel_error", fit.axial_mean_rel_error, "nondim")
        .count("n_points_used", fit.n_points_used)
        .count("axial_points_used", fit.axial_points_used)
        .text("error_grid", errors.display())
        .num("timing", ms, "ms");
    r
}

pub fn fit(args: &FitArgs) -> Result<Report> {
    let start = Instant::now();
    let mesh = read_mesh(&args.mesh).with_context(|| format!("reading {}", args.mesh.display()))?;
    let opts = FitOptions {
        level_fraction: args.level_fraction,
        apex_window: args.apex_window,
        ..FitOptions::default()
    };
    let fit = fit_mesh(&mesh, &opts)?;
    let errors = errors_path(&args.errors, &args.out);
    write_mesh(&fit_error_grid(&mesh, &fit)?, &errors).with_context(|| format!("writing {}", errors.display()))?;
    let report = fit_report(&fit, &args.mesh, &errors, &opts, elapsed_ms(start));
    report.write(&args.out)?;
    Ok(report)
}

pub fn axial(args: &AxialArgs) -> Result<Report> {
    let start = Instant::now();
    let mesh = read_mesh(&args.mesh).with_context(|| format!("reading {}", args.mesh.display()))?;
    let saved = ReportFile::read(&args.fit)?;
    let params = ModelParams::new(saved.f64("a")?, saved.f64("b")?)?;
    let ellipse = DomainEllipse::new(saved.f64("semi_axis_x")?, saved.f64("semi_axis_y")?)?;
    let scale_radius = saved.f64("scale_radius")?;
    let center = (saved.f64("apex_x")?, saved.f64("apex_y")?);
    if !(scale_radius.is_finite() && scale_radius > 0.0) {
        bail!(Error::Domain {
            op: "axial",
            detail: format!("scale_radius {scale_radius} must be positive"),
        });
    }

    let data = axial_distance_map(&SurfaceSource::MeshAt(&mesh, center), &ellipse, &mesh, args.gradient_floor);
    let model_source = SurfaceSource::Model {
        params,
        scale_radius,
        center,
    };
    let model = axial_distance_map(&model_source, &ellipse, &mesh, args.gradient_floor);
    let stats = axial_errors(&mesh, &data, &model, center, args.apex_exclusion * scale_radius);
    if stats.n_points == 0 {
        bail!(Error::DegenerateLevelSet("no points with a defined axial distance".into()));
    }
    write_mesh(&data.to_mesh(&mesh)?, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    let errors = errors_path(&args.errors, &args.out);
    write_mesh(&mesh.with_values(axial_error_values(&data, &model))?, &errors)
        .with_context(|| format!("writing {}", errors.display()))?;

    let mut r = Report::new("axial");
    r.text("mesh", args.mesh.display())
        .text("fit", args.fit.display())
        .num("gradient_floor", args.gradient_floor, "nondim")
        .num("apex_exclusion", args.apex_exclusion, "nondim")
        .count("defined_points", data.defined_count())
        .num("axial_mean_abs_error", stats.mean_abs, "mm")
        .num("axial_mean_rel_error", stats.mean_rel, "nondim")
        .count("compared_points", stats.n_points)
        .text("axial_grid", args.out.display())
        .text("error_grid", errors.display())
        .num("timing", elapsed_ms(start), "ms");
    Ok(r)
}
