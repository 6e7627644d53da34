use crate::state::Loaded;
use axum::http::StatusCode;
use nmpinv_core::config::ServiceConfig;
use nmpinv_core::experiment::{
    evaluate, preprocess_drawing, reduction_pct, rms_error_nd, DrawingOptions, ExperimentResult,
};
use nmpinv_core::strategy::Method;
use nmpinv_core::Error;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessingOverrides {
    pub smoothing_window: Option<usize>,
    pub workspace: Option<f64>,
}

/// Points are `[t, value]` or `[t, x, y]` / `[t, x, y, z]`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackRequest {
    pub points: Vec<Vec<f64>>,
    pub system: String,
    pub method: String,
    #[serde(default)]
    pub preprocessing: PreprocessingOverrides,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub axis: String,
    pub t: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessingInfo {
    pub resampling: String,
    pub smoothing: String,
    pub smoothing_window: usize,
    pub workspace: f64,
    pub max_duration_s: f64,
    pub sample_time: f64,
    pub start_at_rest: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackResponse {
    pub system: String,
    pub method: String,
    pub sample_time: f64,
    pub desired: Vec<Series>,
    pub output: Vec<Series>,
    pub reference: Vec<Series>,
    pub baseline_output: Vec<Series>,
    pub rms: Option<f64>,
    pub baseline_rms: Option<f64>,
    pub reduction_pct: Option<f64>,
    pub diverged: bool,
    pub divergence_time: Option<f64>,
    pub preprocessing: PreprocessingInfo,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::BadDrawing(_) => StatusCode::BAD_REQUEST,
            Error::UnknownStrategy(_) | Error::UnknownSystem(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

fn parse_method(tag: &str) -> Result<Method, ApiError> {
    match tag {
        "baseline" => Ok(Method::Baseline),
        "M2_zos" => Ok(Method::Zos),
        "M3_dnn" | "M3_approx_dnn" => Ok(Method::ApproxDnn),
        "M1_dnn" | "M1_exact_dnn" => Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "the exact-inverse network is only available in batch experiments",
        )),
        other => Err(Error::UnknownStrategy(other.to_string()).into()),
    }
}

fn axis_names(n: usize) -> Vec<String> {
    if n == 1 {
        vec!["value".to_string()]
    } else {
        ["x", "y", "z"][..n].iter().map(|s| s.to_string()).collect()
    }
}

fn series(names: &[String], dt: f64, data: impl Iterator<Item = Vec<f64>>) -> Vec<Series> {
    names
        .iter()
        .zip(data)
        .map(|(axis, v)| Series {
            axis: axis.clone(),
            t: (0..v.len()).map(|k| k as f64 * dt).collect(),
            v,
        })
        .collect()
}

fn combined_rms(runs: &[&ExperimentResult]) -> nmpinv_core::Result<Option<f64>> {
    if runs.iter().any(|r| r.diverged) {
        return Ok(None);
    }
    let y: Vec<Vec<f64>> = runs.iter().map(|r| r.y.clone()).collect();
    let yd: Vec<Vec<f64>> = runs.iter().map(|r| r.y_d.clone()).collect();
    rms_error_nd(&y, &yd, 0).map(Some)
}

/// Preprocesses the drawing, runs the baseline and the chosen method on every
/// axis and scores both over the whole trajectory.
pub fn track(
    loaded: &Loaded,
    cfg: &ServiceConfig,
    req: &TrackRequest,
) -> Result<TrackResponse, ApiError> {
    let method = parse_method(&req.method)?;
    let entry = loaded
        .systems
        .get(&req.system)
        .ok_or_else(|| ApiError::from(Error::UnknownSystem(req.system.clone())))?;
    let strategy = entry
        .registry
        .iter()
        .map(|(_, s)| s)
        .find(|s| s.method() == method)
        .cloned()
        .ok_or_else(|| {
            ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                format!("no {} strategy loaded for {}", req.method, req.system),
            )
        })?;

    let width = req.points.first().map_or(0, Vec::len);
    if !(2..=4).contains(&width) || req.points.iter().any(|p| p.len() != width) {
        return Err(
            Error::BadDrawing("points must all be [t, value] or [t, x, y(, z)]".into()).into(),
        );
    }
    let n_axes = width - 1;
    if n_axes > 1 && req.system == "pendulum" {
        return Err(Error::BadDrawing("the pendulum tracks a single axis".into()).into());
    }
    let t: Vec<f64> = req.points.iter().map(|p| p[0]).collect();
    let axes: Vec<Vec<f64>> = (1..width)
        .map(|i| req.points.iter().map(|p| p[i]).collect())
        .collect();
    let dt = entry.system.sample_time();
    let opts = DrawingOptions {
        sample_time: dt,
        smoothing_window: req
            .preprocessing
            .smoothing_window
            .unwrap_or(cfg.smoothing_window),
        workspace: req.preprocessing.workspace.unwrap_or(cfg.workspace),
        max_duration: cfg.max_duration_s,
    };
    if !(opts.workspace > 0.0) {
        return Err(Error::BadDrawing("workspace must be positive".into()).into());
    }
    let prepared = preprocess_drawing(&t, &axes, &opts)?;

    let mut base_runs = Vec::with_capacity(n_axes);
    let mut method_runs = Vec::with_capacity(n_axes);
    for a in &prepared.axes {
        let mut r = evaluate("track", a, entry.system.as_ref(), &[strategy.clone()], 0, 0)?;
        let m = if r.len() > 1 { r.pop() } else { None };
        let b = r.pop().ok_or_else(|| {
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "baseline run missing")
        })?;
        method_runs.push(m.unwrap_or_else(|| b.clone()));
        base_runs.push(b);
    }
    let base: Vec<&ExperimentResult> = base_runs.iter().collect();
    let runs: Vec<&ExperimentResult> = method_runs.iter().collect();
    let baseline_rms = combined_rms(&base)?;
    let rms = combined_rms(&runs)?;
    let names = axis_names(n_axes);
    Ok(TrackResponse {
        system: req.system.clone(),
        method: method.tag().to_string(),
        sample_time: dt,
        desired: series(&names, dt, prepared.axes.iter().cloned()),
        output: series(&names, dt, runs.iter().map(|r| r.y.clone())),
        reference: series(&names, dt, runs.iter().map(|r| r.u.clone())),
        baseline_output: series(&names, dt, base.iter().map(|r| r.y.clone())),
        reduction_pct: rms.zip(baseline_rms).and_then(|(m, b)| reduction_pct(m, b)),
        rms,
        baseline_rms,
        diverged: runs.iter().any(|r| r.diverged),
        divergence_time: runs
            .iter()
            .filter_map(|r| r.divergence_time)
            .reduce(f64::min),
        preprocessing: PreprocessingInfo {
            resampling: "natural_cubic_spline".into(),
            smoothing: "centered_moving_average".into(),
            smoothing_window: opts.smoothing_window,
            workspace: opts.workspace,
            max_duration_s: opts.max_duration,
            sample_time: dt,
            start_at_rest: true,
        },
    })
}
