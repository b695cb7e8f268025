//! One-dimensional GP and EI curves on `cos x + sin 2x + x/2` over [−5, 5].

use std::path::{Path, PathBuf};

use adbo::acquisition::expected_improvement;
use adbo::doe::{lhs_sample, SearchBox};
use adbo::gp::{fit, Archive, GpModel, LengthScaleBounds};
use adbo::objectives::fig1_demo;
use adbo::RngState;
use serde::Serialize;

use crate::error::HarnessError;
use crate::plot::{Figure, Series, Style};
use crate::trace_io::{format_float, write_atomic};

pub const GP_PLOT: &str = "gp_fit.svg";
pub const EI_PLOT: &str = "ei.svg";
pub const CURVES: &str = "demo_curves.csv";
pub const MODEL: &str = "demo_model.json";

/// Fitted hyperparameters written next to the curves.
#[derive(Debug, Clone, Serialize)]
struct ModelRecord {
    length_scale: f64,
    mu_hat: f64,
    sigma2_hat: f64,
    jitter: f64,
    f_min: f64,
    sample_x: Vec<f64>,
    sample_y: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DemoOptions {
    pub samples: usize,
    pub grid_points: usize,
    pub seed: u64,
}

impl Default for DemoOptions {
    fn default() -> Self {
        Self {
            samples: 7,
            grid_points: 1001,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DemoOutput {
    pub sample_x: Vec<f64>,
    pub sample_y: Vec<f64>,
    /// Uniform grid merged with the sample locations, ascending.
    pub grid: Vec<f64>,
    pub truth: Vec<f64>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub ei: Vec<f64>,
    pub model: GpModel<f64>,
    pub files: Vec<PathBuf>,
}

impl DemoOutput {
    /// Grid position of each sample.
    pub fn sample_positions(&self) -> Vec<usize> {
        self.sample_x
            .iter()
            .map(|x| self.grid.iter().position(|g| g == x).expect("samples are on the grid"))
            .collect()
    }
}

pub fn run_demo(out_dir: &Path, options: &DemoOptions) -> Result<DemoOutput, HarnessError> {
    if options.samples < 2 || options.grid_points < 2 {
        return Err(HarnessError::Usage("the demo needs at least two samples and two grid points".into()));
    }
    let bounds = SearchBox::uniform(1, -5.0, 5.0)?;
    let design = lhs_sample(options.samples, &bounds, &mut RngState::new(options.seed, 0).generator())?;
    let mut sample_x: Vec<f64> = design.iter().map(|r| r[0]).collect();
    sample_x.sort_by(f64::total_cmp);
    let sample_y: Vec<f64> = sample_x.iter().map(|&x| fig1_demo(x)).collect();
    let archive = Archive::new(sample_x.iter().map(|&x| vec![x]).collect(), sample_y.clone())?;
    let model = fit(&archive, &bounds, LengthScaleBounds::default())?;
    let f_min = sample_y.iter().copied().fold(f64::INFINITY, f64::min);

    let step = 10.0 / (options.grid_points - 1) as f64;
    let mut grid: Vec<f64> = (0..options.grid_points).map(|i| -5.0 + step * i as f64).collect();
    grid.extend(&sample_x);
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let (mut truth, mut mean, mut sd, mut ei) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for &x in &grid {
        let p = model.predict(&[x])?;
        truth.push(fig1_demo(x));
        mean.push(p.mean);
        sd.push(p.sd());
        ei.push(expected_improvement(p.mean, p.sd(), f_min)?);
    }

    let pts = |ys: &[f64]| grid.iter().copied().zip(ys.iter().copied()).collect::<Vec<_>>();
    let upper: Vec<f64> = mean.iter().zip(&sd).map(|(m, s)| m + 2.0 * s).collect();
    let lower: Vec<f64> = mean.iter().zip(&sd).map(|(m, s)| m - 2.0 * s).collect();
    let samples: Vec<(f64, f64)> = sample_x.iter().copied().zip(sample_y.iter().copied()).collect();
    let gp_fig = Figure {
        title: "GP fit of f(x) = cos x + sin 2x + 0.5x".into(),
        x_label: "x".into(),
        y_label: "f(x)".into(),
        log_y: false,
        series: vec![
            Series::line("true function", pts(&truth)),
            Series::line("predictive mean", pts(&mean)).with_style(Style::Dashed),
            Series::line("mean + 2 sd", pts(&upper)).with_style(Style::Dashed),
            Series::line("mean - 2 sd", pts(&lower)).with_style(Style::Dashed),
            Series::line("samples", samples.clone()).with_style(Style::Markers),
        ],
    };
    let ei_fig = Figure {
        title: "Expected improvement".into(),
        x_label: "x".into(),
        y_label: "EI(x)".into(),
        log_y: false,
        series: vec![
            Series::line("expected improvement", pts(&ei)),
            Series::line("samples", sample_x.iter().map(|&x| (x, 0.0)).collect()).with_style(Style::Markers),
        ],
    };
    let gp_path = out_dir.join(GP_PLOT);
    let ei_path = out_dir.join(EI_PLOT);
    let csv_path = out_dir.join(CURVES);
    gp_fig.save(&gp_path)?;
    ei_fig.save(&ei_path)?;

    let mut csv = String::from("x,truth,mean,sd,ei,sample\n");
    for i in 0..grid.len() {
        let is_sample = sample_x.contains(&grid[i]);
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_float(grid[i]),
            format_float(truth[i]),
            format_float(mean[i]),
            format_float(sd[i]),
            format_float(ei[i]),
            u8::from(is_sample)
        ));
    }
    write_atomic(&csv_path, csv.as_bytes())?;
    let model_path = out_dir.join(MODEL);
    let record = ModelRecord {
        length_scale: model.length_scale(),
        mu_hat: model.mu_hat(),
        sigma2_hat: model.sigma2_hat(),
        jitter: model.jitter(),
        f_min,
        sample_x: sample_x.clone(),
        sample_y: sample_y.clone(),
    };
    let json = serde_json::to_string_pretty(&record).map_err(|e| HarnessError::Run(e.to_string()))? + "\n";
    write_atomic(&model_path, json.as_bytes())?;

    Ok(DemoOutput {
        sample_x,
        sample_y,
        grid,
        truth,
        mean,
        sd,
        ei,
        model,
        files: vec![gp_path, ei_path, csv_path, model_path],
    })
}
