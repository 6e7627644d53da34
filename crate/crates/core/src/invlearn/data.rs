use super::FeatureSpec;
use crate::plantsim::{central_difference_velocity, BaselineSystem};
use crate::{Error, Result};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

/// A desired output sampled uniformly from `t = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub name: String,
    pub sample_time: f64,
    pub values: Vec<f64>,
}

impl Trajectory {
    pub fn sinusoid(amplitude: f64, period: f64, duration: f64, dt: f64) -> Self {
        let len = (duration / dt).round() as usize;
        Trajectory {
            name: format!("sin_A{amplitude}_T{period}"),
            sample_time: dt,
            values: (0..len)
                .map(|k| amplitude * (2.0 * PI * k as f64 * dt / period).sin())
                .collect(),
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len())
            .map(|k| k as f64 * self.sample_time)
            .collect()
    }
}

/// One sinusoid per (amplitude, period) pair, amplitudes varying slowest.
pub fn generate_training_trajectories(
    amplitudes: &[f64],
    periods: &[f64],
    duration: f64,
    dt: f64,
) -> Result<Vec<Trajectory>> {
    if amplitudes.is_empty() || periods.is_empty() {
        return Err(Error::invalid(
            "amplitude and period sets must be non-empty",
        ));
    }
    if !(dt > 0.0) || !(duration > 0.0) || periods.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::invalid(
            "duration, periods and sample time must be positive",
        ));
    }
    Ok(amplitudes
        .iter()
        .flat_map(|&a| {
            periods
                .iter()
                .map(move |&p| Trajectory::sinusoid(a, p, duration, dt))
        })
        .collect())
}

/// Reference fed to the baseline and the output it produced, one sample per reference update.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub id: usize,
    pub sample_time: f64,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
}

pub fn collect_baseline_data(
    baseline: &dyn BaselineSystem,
    trajectories: &[Trajectory],
) -> Result<Vec<TrajectoryLog>> {
    trajectories
        .iter()
        .enumerate()
        .map(|(id, tr)| {
            let trace = baseline.run(&tr.values)?;
            if trace.diverged {
                return Err(Error::BaselineDiverged {
                    id,
                    time: trace.divergence_time.unwrap_or(f64::NAN),
                });
            }
            Ok(TrajectoryLog {
                id,
                sample_time: baseline.sample_time(),
                u: tr.values.clone(),
                y: trace.y,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetOptions {
    /// Leading samples of every log left out of the dataset.
    pub skip_initial: usize,
    /// Subsample to this many rows, equal share per log.
    pub target_size: Option<usize>,
    pub seed: u64,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        DatasetOptions {
            skip_initial: 0,
            target_size: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingDataset {
    pub features: Array2<f64>,
    pub labels: Array2<f64>,
    pub feature_names: Vec<String>,
    pub label_name: String,
    pub source_ids: Vec<usize>,
    pub sample_time: f64,
}

impl TrainingDataset {
    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["source".to_string()];
        header.extend(self.feature_names.iter().cloned());
        header.push(self.label_name.clone());
        w.write_record(&header)?;
        for (i, (row, label)) in self
            .features
            .rows()
            .into_iter()
            .zip(self.labels.rows())
            .enumerate()
        {
            let mut rec = vec![self.source_ids[i].to_string()];
            rec.extend(row.iter().chain(label.iter()).map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Rows for every `k` whose full window lies inside the log. The logged output
/// stands in for the desired output.
pub fn build_features(
    spec: &FeatureSpec,
    logs: &[TrajectoryLog],
    opts: &DatasetOptions,
) -> Result<TrainingDataset> {
    spec.validate()?;
    if logs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (lo, hi) = spec.span();
    let needed = (hi - lo + 1) as usize + opts.skip_initial;
    let first = opts.skip_initial.max((-lo) as usize);
    let mut per_log: Vec<Vec<usize>> = Vec::with_capacity(logs.len());
    for log in logs {
        if log.u.len() != log.y.len() {
            return Err(Error::DimensionMismatch {
                context: "log u/y length",
                expected: log.u.len(),
                found: log.y.len(),
            });
        }
        if log.y.len() < needed || log.y.len() < first + hi as usize + 1 {
            return Err(Error::LogTooShort {
                id: log.id,
                len: log.y.len(),
                needed: needed.max(first + hi as usize + 1),
            });
        }
        per_log.push((first..log.y.len() - hi as usize).collect());
    }

    if let Some(target) = opts.target_size {
        let total: usize = per_log.iter().map(|v| v.len()).sum();
        if target < total {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let share = target / logs.len();
            let extra = target % logs.len();
            for (i, rows) in per_log.iter_mut().enumerate() {
                rows.shuffle(&mut rng);
                rows.truncate(share + usize::from(i < extra));
                rows.sort_unstable();
            }
        }
    }

    let width = spec.feature_count();
    let rows: usize = per_log.iter().map(|v| v.len()).sum();
    let mut features = Vec::with_capacity(rows * width);
    let mut labels = Vec::with_capacity(rows);
    let mut source_ids = Vec::with_capacity(rows);
    for (log, ks) in logs.iter().zip(&per_log) {
        let vel = if spec.velocity {
            central_difference_velocity(&log.y, log.sample_time)
        } else {
            Vec::new()
        };
        for &k in ks {
            let idx = |i: isize| (k as isize + i) as usize;
            let row = spec.encode(&|i| log.y[idx(i)], &|i| vel[idx(i)], &|i| log.u[idx(i)]);
            let label = spec.label(log.u[k], log.y[k]);
            if row.iter().any(|v| !v.is_finite()) || !label.is_finite() {
                return Err(Error::invalid(format!(
                    "non-finite sample in log {} at k = {k}",
                    log.id
                )));
            }
            features.extend(row);
            labels.push(label);
            source_ids.push(log.id);
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(TrainingDataset {
        features: Array2::from_shape_vec((labels.len(), width), features).expect("row width"),
        labels: Array2::from_shape_vec((labels.len(), 1), labels).expect("single label"),
        feature_names: spec.feature_names(),
        label_name: spec.label_name().to_string(),
        source_ids,
        sample_time: logs[0].sample_time,
    })
}

/// `A (exp(2 pi p dt / T) - 1)`, the summed bound on `|u(k+p) - u(k)|` for a
/// sinusoid of amplitude `A` and period `T`.
pub fn taylor_correlation_bound(amplitude: f64, period: f64, dt: f64, p: usize) -> Result<f64> {
    if !(period > 0.0) || !(dt > 0.0) {
        return Err(Error::invalid("period and sample time must be positive"));
    }
    Ok(amplitude.abs() * (2.0 * PI * p as f64 * dt / period).exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invlearn::InputSelection;

    fn log(id: usize, len: usize) -> TrajectoryLog {
        TrajectoryLog {
            id,
            sample_time: 0.1,
            u: (0..len).map(|k| -(k as f64)).collect(),
            y: (0..len).map(|k| k as f64).collect(),
        }
    }

    #[test]
    fn window_counting() {
        let spec = FeatureSpec::new(InputSelection::ApproxInverse { n: 2 });
        let ds = build_features(&spec, &[log(0, 100)], &DatasetOptions::default()).unwrap();
        assert_eq!(ds.len(), 98);
        assert_eq!(ds.features.row(0).to_vec(), [0.0, 1.0, 2.0]);
        assert_eq!(ds.labels[[0, 0]], 0.0);
        let exact = FeatureSpec::new(InputSelection::ExactInverse { n: 2, r: 1 });
        let ds = build_features(&exact, &[log(0, 100)], &DatasetOptions::default()).unwrap();
        assert_eq!(ds.len(), 98);
        assert_eq!(ds.features.row(0).to_vec(), [0.0, 1.0, 2.0, 0.0]);
        assert_eq!(ds.labels[[0, 0]], -1.0);
    }

    #[test]
    fn short_logs_rejected() {
        let spec = FeatureSpec::new(InputSelection::ApproxInverse { n: 4 });
        let err = build_features(&spec, &[log(0, 10), log(3, 4)], &DatasetOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::LogTooShort { id: 3, len: 4, .. }));
        let skip = DatasetOptions {
            skip_initial: 8,
            ..DatasetOptions::default()
        };
        assert!(build_features(&spec, &[log(0, 12)], &skip).is_err());
    }

    #[test]
    fn equal_share_subsampling() {
        let spec = FeatureSpec::new(InputSelection::ApproxInverse { n: 1 });
        let logs = [log(0, 50), log(1, 80), log(2, 200)];
        let opts = DatasetOptions {
            skip_initial: 5,
            target_size: Some(90),
            seed: 3,
        };
        let ds = build_features(&spec, &logs, &opts).unwrap();
        for id in 0..3 {
            assert_eq!(ds.source_ids.iter().filter(|&&s| s == id).count(), 30);
        }
        assert!(ds.features.column(0).iter().all(|&y| y >= 5.0));
        assert_eq!(ds, build_features(&spec, &logs, &opts).unwrap());
    }

    #[test]
    fn trajectory_grid() {
        let amps = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
        let periods = [5.0, 10.0, 15.0, 20.0, 25.0];
        assert_eq!(
            generate_training_trajectories(&amps, &periods, 60.0, 0.015)
                .unwrap()
                .len(),
            30
        );
        let amps = [0.04, 0.06, 0.08];
        let periods = [5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        assert_eq!(
            generate_training_trajectories(&amps, &periods, 30.0, 1.0 / 70.0)
                .unwrap()
                .len(),
            18
        );
        let one = generate_training_trajectories(&[1.0], &[10.0], 10.0, 0.01).unwrap();
        let peak = one[0].values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!((peak - 1.0).abs() < 1e-9);
        assert!(generate_training_trajectories(&[], &[1.0], 1.0, 0.1).is_err());
    }

    #[test]
    fn taylor_bound_values() {
        assert_eq!(taylor_correlation_bound(1.0, 10.0, 0.015, 0).unwrap(), 0.0);
        let b = taylor_correlation_bound(1.0, 10.0, 0.015, 1).unwrap();
        assert!((b - 0.009469).abs() < 1e-6, "{b}");
    }

    #[test]
    fn csv_has_named_columns() {
        let spec = FeatureSpec::new(InputSelection::ApproxInverse { n: 1 });
        let ds = build_features(&spec, &[log(4, 3)], &DatasetOptions::default()).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "source,y(k),y(k+1),u(k)\n4,0,1,-0\n4,1,2,-1\n");
    }
}
