//! Temporal-order matrix, causal vector and stability statistics.
//!
//! For window start `t` and shift `s` the cell compares
//! `signal1[t, t+L)` with `signal2[t+s, t+s+L)`, each scaled on its own.
//! A positive best shift therefore means the matching part of signal2 comes
//! later, i.e. signal1 precedes signal2.

use rayon::prelude::*;

use crate::metrics::{AdjustedRSquared, Fourier, Manhattan, SegmentKernel};
use crate::preprocess::ScaleParams;
use crate::scalar::Scalar;
use crate::types::{
    validate_config, AnalysisConfig, BivariateRecord, CausalVector, DistanceKind, Method, Scaling,
    StabilityReport, StableRun, TemporalOrderMatrix, ValidationError,
};

/// Windows handled per work item. Each item prepares the signal2 segments
/// it needs once and reuses them across its rows.
const WINDOWS_PER_CHUNK: usize = 64;

/// How matrix rows are scheduled. Every mode yields bit-identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon's global pool.
    #[default]
    Parallel,
    /// A dedicated pool with this many workers.
    Threads(usize),
}

/// Everything one analysis run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOutcome<T> {
    pub matrix: TemporalOrderMatrix<T>,
    pub causal_vector: CausalVector,
    pub stability: StabilityReport,
}

pub fn compute_matrix<T: Scalar>(
    record: &BivariateRecord<T>,
    config: &AnalysisConfig,
) -> Result<TemporalOrderMatrix<T>, ValidationError> {
    compute_matrix_with(record, config, Execution::default())
}

pub fn compute_matrix_with<T: Scalar>(
    record: &BivariateRecord<T>,
    config: &AnalysisConfig,
    execution: Execution,
) -> Result<TemporalOrderMatrix<T>, ValidationError> {
    validate_config(config, record)?;
    let seg = config.segment_len_samples();
    let windows: Vec<usize> = (0..=record.signal1().len() - seg)
        .step_by(config.window_step_samples())
        .collect();
    let shifts = config.shift_grid();
    let grid = Grid {
        s1: record.signal1().values(),
        s2: record.signal2().values(),
        seg,
        scaling: config.scaling(),
        shifts: &shifts,
    };

    let scores = match (config.method(), config.distance()) {
        (Method::Lm, _) => grid.fill(&AdjustedRSquared, &windows, execution),
        (Method::Td, DistanceKind::Manhattan) => grid.fill(&Manhattan, &windows, execution),
        (Method::Td, DistanceKind::Fourier) => grid.fill(&Fourier::new(seg), &windows, execution),
    };

    TemporalOrderMatrix::from_parts(
        scores,
        windows,
        shifts,
        record.sample_rate_hz(),
        record.signal1().start_time_s(),
        config.method(),
        config.distance(),
    )
}

struct Grid<'a, T> {
    s1: &'a [T],
    s2: &'a [T],
    seg: usize,
    scaling: Scaling,
    shifts: &'a [i64],
}

impl<T: Scalar> Grid<'_, T> {
    fn fill<K: SegmentKernel<T>>(
        &self,
        kernel: &K,
        windows: &[usize],
        execution: Execution,
    ) -> Vec<Option<T>> {
        let chunks: Vec<&[usize]> = windows.chunks(WINDOWS_PER_CHUNK).collect();
        let work = |chunk: &&[usize]| self.fill_chunk(kernel, chunk);
        let parts: Vec<Vec<Option<T>>> = match execution {
            Execution::Sequential => chunks.iter().map(work).collect(),
            Execution::Parallel => chunks.par_iter().map(work).collect(),
            Execution::Threads(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("worker pool")
                .install(|| chunks.par_iter().map(work).collect()),
        };
        parts.concat()
    }

    fn prepare<K: SegmentKernel<T>>(
        &self,
        kernel: &K,
        segment: &[T],
        scratch: &mut Vec<T>,
    ) -> Option<K::Prepared> {
        let params = ScaleParams::fit(segment, self.scaling).ok()?;
        params.apply_into(segment, scratch);
        kernel.prepare(scratch).ok()
    }

    fn fill_chunk<K: SegmentKernel<T>>(&self, kernel: &K, windows: &[usize]) -> Vec<Option<T>> {
        let n_shifts = self.shifts.len();
        let mut out = Vec::with_capacity(windows.len() * n_shifts);
        let (Some(&first), Some(&last)) = (windows.first(), windows.last()) else {
            return out;
        };
        let seg = self.seg as i64;
        let last_pos = self.s2.len() as i64 - seg;
        let lo = (first as i64 + self.shifts[0]).max(0);
        let hi = (last as i64 + self.shifts[n_shifts - 1]).min(last_pos);
        // lazily prepared signal2 segments, indexed by position - lo
        let mut cache: Vec<Option<Option<K::Prepared>>> = Vec::new();
        cache.resize_with((hi - lo + 1).max(0) as usize, || None);
        let mut scratch = Vec::with_capacity(self.seg);

        for &t in windows {
            let reference = self.prepare(kernel, &self.s1[t..t + self.seg], &mut scratch);
            for &s in self.shifts {
                let p = t as i64 + s;
                let cell = match &reference {
                    Some(a) if p >= 0 && p <= last_pos => {
                        let slot = &mut cache[(p - lo) as usize];
                        if slot.is_none() {
                            let start = p as usize;
                            *slot = Some(self.prepare(
                                kernel,
                                &self.s2[start..start + self.seg],
                                &mut scratch,
                            ));
                        }
                        slot.as_ref()
                            .and_then(Option::as_ref)
                            .map(|b| kernel.score(a, b))
                    }
                    _ => None,
                };
                out.push(cell);
            }
        }
        out
    }
}

/// Best shift per window: highest score for LM, lowest for TD.
///
/// With a threshold, only scores strictly above it (LM) or strictly below it
/// (TD) compete. Equal scores resolve toward the smallest absolute shift,
/// then toward the more negative one.
pub fn extract_causal_vector<T: Scalar>(
    matrix: &TemporalOrderMatrix<T>,
    threshold: Option<f64>,
) -> CausalVector {
    let maximize = matrix.method() == Method::Lm;
    let shifts = matrix.shift_samples();
    let entries = matrix
        .rows()
        .take(matrix.n_windows())
        .map(|row| {
            let mut best: Option<(f64, i64)> = None;
            for (cell, &shift) in row.iter().zip(shifts) {
                let Some(score) = cell.map(Scalar::as_f64) else {
                    continue;
                };
                let passes = match threshold {
                    None => true,
                    Some(th) if maximize => score > th,
                    Some(th) => score < th,
                };
                if !passes {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((b, bs)) => {
                        if score != b {
                            (score > b) == maximize
                        } else {
                            (shift.abs(), shift) < (bs.abs(), bs)
                        }
                    }
                };
                if better {
                    best = Some((score, shift));
                }
            }
            best.map(|(_, s)| s)
        })
        .collect();
    CausalVector::new(
        entries,
        matrix.window_start_times_s(),
        matrix.sample_rate_hz(),
    )
    .expect("matrix axes are consistent")
}

/// Mean/SD of the defined entries, stable runs and the defined-duration ratio.
///
/// A stable run is a maximal stretch of consecutive defined entries that
/// stay within `stable_tolerance_steps` shift steps of the run's first value.
pub fn stability_report(
    cv: &CausalVector,
    config: &AnalysisConfig,
    signal_duration_s: f64,
) -> StabilityReport {
    let rate = cv.sample_rate_hz();
    let window_step_s = config.window_step_samples() as f64 / rate;
    let tolerance = (config.stable_tolerance_steps() * config.shift_step_samples()) as i64;
    let to_ms = |s: i64| s as f64 * 1000.0 / rate;

    let defined: Vec<f64> = cv
        .shift_samples()
        .iter()
        .flatten()
        .map(|&s| to_ms(s))
        .collect();
    let mean = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    let sd = mean.filter(|_| defined.len() > 1).map(|m| {
        let ss = defined.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
        (ss / (defined.len() - 1) as f64).sqrt()
    });

    let times = cv.window_start_times_s();
    let mut runs = Vec::new();
    let mut open: Option<(usize, i64, usize)> = None;
    let close = |run: Option<(usize, i64, usize)>, runs: &mut Vec<StableRun>| {
        if let Some((start, value, len)) = run {
            runs.push(StableRun {
                start_time_s: times[start],
                duration_s: len as f64 * window_step_s,
                shift_ms: to_ms(value),
            });
        }
    };
    for (i, entry) in cv.shift_samples().iter().enumerate() {
        match (*entry, open) {
            (Some(v), Some((start, first, len))) if (v - first).abs() <= tolerance => {
                open = Some((start, first, len + 1));
            }
            (Some(v), _) => {
                close(open.take(), &mut runs);
                open = Some((i, v, 1));
            }
            (None, _) => close(open.take(), &mut runs),
        }
    }
    close(open, &mut runs);

    let ratio = if signal_duration_s > 0.0 {
        (100.0 * defined.len() as f64 * window_step_s / signal_duration_s).clamp(0.0, 100.0)
    } else {
        0.0
    };
    let mean_run_ms = if runs.is_empty() {
        0.0
    } else {
        runs.iter().map(|r| r.duration_s * 1000.0).sum::<f64>() / runs.len() as f64
    };
    StabilityReport::new(mean, sd, ratio, runs, mean_run_ms).expect("ratio clamped to [0, 100]")
}

/// Matrix, thresholded causal vector and stability report in one call.
pub fn run_analysis<T: Scalar>(
    record: &BivariateRecord<T>,
    config: &AnalysisConfig,
) -> Result<AnalysisOutcome<T>, ValidationError> {
    run_analysis_with(record, config, Execution::default())
}

pub fn run_analysis_with<T: Scalar>(
    record: &BivariateRecord<T>,
    config: &AnalysisConfig,
    execution: Execution,
) -> Result<AnalysisOutcome<T>, ValidationError> {
    let matrix = compute_matrix_with(record, config, execution)?;
    let causal_vector = extract_causal_vector(&matrix, config.threshold());
    let stability = stability_report(&causal_vector, config, record.signal1().duration_s());
    Ok(AnalysisOutcome {
        matrix,
        causal_vector,
        stability,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{adjusted_r_squared, fourier_distance, manhattan_distance};
    use crate::preprocess::scale_segment;
    use crate::types::TimeSeries;
    use std::f64::consts::PI;

    fn record(a: Vec<f64>, b: Vec<f64>, rate: f64) -> BivariateRecord<f64> {
        BivariateRecord::new(
            TimeSeries::new(a, rate, 0.0).unwrap(),
            TimeSeries::new(b, rate, 0.0).unwrap(),
            ["a".into(), "b".into()],
        )
        .unwrap()
    }

    fn chirpish(n: usize, rate: f64) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let t = i as f64 / rate;
                (2.0 * PI * 0.13 * t).sin()
                    + 0.4 * (2.0 * PI * 0.31 * t + 0.3 * t * t / 100.0).cos()
            })
            .collect()
    }

    fn row_argmin(row: &[Option<f64>]) -> usize {
        (0..row.len())
            .filter(|&k| row[k].is_some())
            .min_by(|&a, &b| row[a].unwrap().total_cmp(&row[b].unwrap()))
            .unwrap()
    }

    #[test]
    fn identical_signals_align_at_zero() {
        let x = chirpish(1500, 25.0);
        let rec = record(x.clone(), x, 25.0);
        let cfg = AnalysisConfig::builder()
            .window_step_samples(7)
            .build()
            .unwrap();
        let m = compute_matrix(&rec, &cfg).unwrap();
        let zero = m.shift_samples().iter().position(|&s| s == 0).unwrap();
        for w in 0..m.n_windows() {
            assert_eq!(m.get(w, zero), Some(0.0));
            assert_eq!(row_argmin(m.row(w)), zero);
        }
    }

    #[test]
    fn half_second_delay_is_found() {
        // 0.5 s is 12.5 samples at 25 Hz, so either neighbour is acceptable
        let rate = 25.0;
        let n = 3000;
        let s1: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * 0.1 * i as f64 / rate).sin())
            .collect();
        let s2: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * 0.1 * (i as f64 / rate - 0.5)).sin())
            .collect();
        let cfg = AnalysisConfig::defaults_for_rate(rate).unwrap();
        let m = compute_matrix(&record(s1, s2, rate), &cfg).unwrap();
        for w in 0..m.n_windows() {
            let row = m.row(w);
            if row.iter().all(Option::is_some) {
                let best = m.shift_samples()[row_argmin(row)];
                assert!((12..=13).contains(&best), "window {w}: {best}");
            }
        }
    }

    #[test]
    fn negative_shifts_undefined_at_first_window() {
        let x = chirpish(600, 25.0);
        let rec = record(x.clone(), x, 25.0);
        let cfg = AnalysisConfig::defaults_for_rate(25.0).unwrap();
        let m = compute_matrix(&rec, &cfg).unwrap();
        for (k, &s) in m.shift_samples().iter().enumerate() {
            assert_eq!(m.get(0, k).is_none(), s < 0, "shift {s}");
        }
    }

    #[test]
    fn grid_arithmetic_for_default_bundle() {
        let x = chirpish(6000, 25.0);
        let rec = record(x.clone(), x, 25.0);
        let m = compute_matrix(&rec, &AnalysisConfig::defaults_for_rate(25.0).unwrap()).unwrap();
        assert_eq!(m.n_shifts(), 101);
        assert_eq!(m.n_windows(), 6000 - 250 + 1);
        let t = m.window_start_times_s();
        assert!((t[1] - t[0] - 0.04).abs() < 1e-12);
        assert_eq!(m.shifts_s()[0], -2.0);
        assert_eq!(m.shifts_s()[100], 2.0);
    }

    #[test]
    fn cells_equal_metric_on_scaled_segments() {
        let rate = 25.0;
        let a = chirpish(400, rate);
        let b: Vec<f64> = a
            .iter()
            .enumerate()
            .map(|(i, v)| v * 1.7 + (i as f64 * 0.37).sin())
            .collect();
        let rec = record(a.clone(), b.clone(), rate);
        for (method, dist) in [
            (Method::Lm, DistanceKind::Manhattan),
            (Method::Td, DistanceKind::Manhattan),
            (Method::Td, DistanceKind::Fourier),
        ] {
            for scaling in [Scaling::None, Scaling::Uniform, Scaling::Gaussian] {
                let cfg = AnalysisConfig::builder()
                    .method(method)
                    .distance(dist)
                    .scaling(scaling)
                    .segment_len_samples(64)
                    .shift_range_samples(-9, 6)
                    .shift_step_samples(3)
                    .window_step_samples(5)
                    .build()
                    .unwrap();
                let m = compute_matrix(&rec, &cfg).unwrap();
                for (w, &t) in m.window_starts().iter().enumerate() {
                    for (k, &s) in m.shift_samples().iter().enumerate() {
                        let p = t as i64 + s;
                        let expected = (p >= 0 && p as usize + 64 <= b.len()).then(|| {
                            let x = scale_segment(&a[t..t + 64], scaling).unwrap();
                            let y =
                                scale_segment(&b[p as usize..p as usize + 64], scaling).unwrap();
                            match (method, dist) {
                                (Method::Lm, _) => adjusted_r_squared(&x, &y).unwrap(),
                                (_, DistanceKind::Manhattan) => manhattan_distance(&x, &y).unwrap(),
                                _ => fourier_distance(&x, &y).unwrap(),
                            }
                        });
                        assert_eq!(
                            m.get(w, k),
                            expected,
                            "{method:?} {dist:?} {scaling:?} w={w} s={s}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn flat_region_gives_undefined_cells_not_errors() {
        let mut a = chirpish(500, 25.0);
        for v in &mut a[100..300] {
            *v = 1.0;
        }
        let rec = record(a.clone(), a, 25.0);
        let cfg = AnalysisConfig::builder()
            .segment_len_samples(50)
            .shift_range_samples(-5, 5)
            .build()
            .unwrap();
        let m = compute_matrix(&rec, &cfg).unwrap();
        let w = m.window_starts().iter().position(|&t| t == 150).unwrap();
        assert!(m.row(w).iter().all(Option::is_none));
        let cv = extract_causal_vector(&m, None);
        assert_eq!(cv.shift_samples()[w], None);
        assert_eq!(cv.shift_samples()[0], Some(0));
    }

    fn one_row(scores: Vec<f64>, method: Method) -> TemporalOrderMatrix<f64> {
        TemporalOrderMatrix::from_parts(
            scores.into_iter().map(Some).collect(),
            vec![0],
            vec![-1, 0, 1],
            1.0,
            0.0,
            method,
            DistanceKind::Manhattan,
        )
        .unwrap()
    }

    #[test]
    fn threshold_leaves_single_survivor() {
        let cv = extract_causal_vector(&one_row(vec![0.2, 0.95, 0.5], Method::Lm), Some(0.9));
        assert_eq!(cv.entries_s(), vec![Some(0.0)]);
    }

    #[test]
    fn threshold_excludes_everything() {
        let cv = extract_causal_vector(&one_row(vec![0.5, 0.6, 0.7], Method::Lm), Some(0.9));
        assert_eq!(cv.entries_s(), vec![None]);
    }

    #[test]
    fn ties_prefer_small_then_negative_shift() {
        let cv = extract_causal_vector(&one_row(vec![0.10, 0.10, 0.40], Method::Td), None);
        assert_eq!(cv.entries_s(), vec![Some(0.0)]);
        let cv = extract_causal_vector(&one_row(vec![0.10, 0.30, 0.10], Method::Td), None);
        assert_eq!(cv.entries_s(), vec![Some(-1.0)]);
        let cv = extract_causal_vector(&one_row(vec![0.7, 0.2, 0.7], Method::Lm), None);
        assert_eq!(cv.entries_s(), vec![Some(-1.0)]);
    }

    #[test]
    fn threshold_is_strict() {
        let cv = extract_causal_vector(&one_row(vec![0.15, 0.2, 0.3], Method::Td), Some(0.15));
        assert_eq!(cv.entries_s(), vec![None]);
    }

    fn cfg_with_steps(window_step: usize) -> AnalysisConfig {
        AnalysisConfig::builder()
            .segment_len_samples(10)
            .shift_range_samples(-20, 20)
            .window_step_samples(window_step)
            .build()
            .unwrap()
    }

    #[test]
    fn stability_worked_example() {
        // 10 Hz, 1 s window step: 0.5 s = 5 samples, 0.3 s = 3 samples
        let cv = CausalVector::new(
            vec![Some(5), Some(5), Some(5), None, Some(3)],
            vec![0.0, 1.0, 2.0, 3.0, 4.0],
            10.0,
        )
        .unwrap();
        let r = stability_report(&cv, &cfg_with_steps(10), 5.0);
        assert_eq!(r.longest_stable_run_s(), 3.0);
        assert_eq!(r.defined_ratio_percent(), 80.0);
        assert_eq!(r.mean_shift_ms(), Some(450.0));
        assert_eq!(r.sd_shift_ms(), Some(100.0));
        assert_eq!(r.stable_runs().len(), 2);
        assert_eq!(r.mean_run_duration_ms(), 2000.0);
        assert_eq!(r.stable_runs()[1].start_time_s, 4.0);
    }

    #[test]
    fn stability_all_undefined() {
        let cv = CausalVector::new(vec![None; 4], vec![0.0, 1.0, 2.0, 3.0], 10.0).unwrap();
        let r = stability_report(&cv, &cfg_with_steps(10), 4.0);
        assert_eq!(r.longest_stable_run_s(), 0.0);
        assert_eq!(r.defined_ratio_percent(), 0.0);
        assert_eq!(r.mean_shift_ms(), None);
        assert_eq!(r.sd_shift_ms(), None);
        assert!(r.stable_runs().is_empty());
    }

    #[test]
    fn stability_constant_vector_single_run_clamped() {
        let times: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let cv = CausalVector::new(vec![Some(7); 100], times, 10.0).unwrap();
        let r = stability_report(&cv, &cfg_with_steps(10), 60.0);
        assert_eq!(r.stable_runs().len(), 1);
        assert_eq!(r.longest_stable_run_s(), 100.0);
        assert_eq!(r.defined_ratio_percent(), 100.0);
    }

    #[test]
    fn stability_tolerance_is_one_step() {
        let cv = CausalVector::new(
            vec![Some(4), Some(5), Some(3), Some(6), Some(4)],
            vec![0.0, 0.1, 0.2, 0.3, 0.4],
            10.0,
        )
        .unwrap();
        let r = stability_report(&cv, &cfg_with_steps(1), 1.0);
        // 4,5,3 stay within one step of 4; 6 opens a new run; 4 another
        let lens: Vec<f64> = r
            .stable_runs()
            .iter()
            .map(|r| (r.duration_s * 10.0).round())
            .collect();
        assert_eq!(lens, vec![3.0, 1.0, 1.0]);
    }

    #[test]
    fn execution_modes_agree_bitwise() {
        let a = chirpish(900, 25.0);
        let b: Vec<f64> = a.iter().map(|v| v.powi(3) - 0.2 * v).collect();
        let rec = record(a, b, 25.0);
        let cfg = AnalysisConfig::builder()
            .segment_len_samples(100)
            .build()
            .unwrap();
        let seq = compute_matrix_with(&rec, &cfg, Execution::Sequential).unwrap();
        let par = compute_matrix_with(&rec, &cfg, Execution::Threads(4)).unwrap();
        let glob = compute_matrix_with(&rec, &cfg, Execution::Parallel).unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq, glob);
    }

    #[test]
    fn empty_overlap_is_a_validation_error() {
        let x = chirpish(300, 25.0);
        let rec = record(x.clone(), x, 25.0);
        let cfg = AnalysisConfig::builder()
            .segment_len_samples(250)
            .shift_range_samples(60, 100)
            .build()
            .unwrap();
        assert_eq!(
            run_analysis(&rec, &cfg).unwrap_err(),
            ValidationError::NoOverlap
        );
    }

    mod invariants {
        use super::*;
        use proptest::prelude::*;

        fn signal(n: usize) -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(-5.0f64..5.0, n)
        }

        fn small_cfg(method: Method, distance: DistanceKind) -> AnalysisConfig {
            AnalysisConfig::builder()
                .method(method)
                .distance(distance)
                .segment_len_samples(12)
                .shift_range_samples(-4, 4)
                .build()
                .unwrap()
        }

        fn close(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
            match (a, b) {
                (Some(x), Some(y)) => (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())),
                (None, None) => true,
                _ => false,
            }
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn swapping_signals_mirrors_cells(a in signal(40), b in signal(40), lm in any::<bool>()) {
                let method = if lm { Method::Lm } else { Method::Td };
                let cfg = small_cfg(method, DistanceKind::Manhattan);
                let rec = record(a, b, 10.0);
                let m = compute_matrix(&rec, &cfg).unwrap();
                let sw = compute_matrix(&rec.swapped(), &cfg).unwrap();
                let shifts = m.shift_samples();
                for w in 0..sw.n_windows() {
                    for (k, &s) in shifts.iter().enumerate() {
                        let t = w as i64 + s;
                        if t < 0 || t as usize >= m.n_windows() {
                            continue;
                        }
                        let k2 = shifts.iter().position(|&x| x == -s).unwrap();
                        prop_assert!(close(sw.get(w, k), m.get(t as usize, k2), 1e-9));
                    }
                }
            }

            #[test]
            fn lm_ignores_affine_maps(
                a in signal(40), b in signal(40),
                alpha in prop_oneof![-3.0f64..-0.2, 0.2f64..3.0], beta in -10.0f64..10.0,
                scaling in prop_oneof![Just(Scaling::None), Just(Scaling::Uniform), Just(Scaling::Gaussian)],
            ) {
                let cfg = AnalysisConfig::builder()
                    .method(Method::Lm)
                    .scaling(scaling)
                    .segment_len_samples(12)
                    .shift_range_samples(-4, 4)
                    .build()
                    .unwrap();
                let b2: Vec<f64> = b.iter().map(|v| alpha * v + beta).collect();
                let m1 = compute_matrix(&record(a.clone(), b, 10.0), &cfg).unwrap();
                let m2 = compute_matrix(&record(a, b2, 10.0), &cfg).unwrap();
                for (x, y) in m1.scores().iter().zip(m2.scores()) {
                    prop_assert!(close(*x, *y, 1e-7), "{:?} vs {:?}", x, y);
                }
            }

            #[test]
            fn gaussian_td_ignores_positive_affine_maps(
                a in signal(40), b in signal(40),
                alpha in 0.2f64..3.0, beta in -10.0f64..10.0, fourier in any::<bool>(),
            ) {
                let dist = if fourier { DistanceKind::Fourier } else { DistanceKind::Manhattan };
                let cfg = small_cfg(Method::Td, dist);
                let b2: Vec<f64> = b.iter().map(|v| alpha * v + beta).collect();
                let m1 = compute_matrix(&record(a.clone(), b, 10.0), &cfg).unwrap();
                let m2 = compute_matrix(&record(a, b2, 10.0), &cfg).unwrap();
                for (x, y) in m1.scores().iter().zip(m2.scores()) {
                    prop_assert!(close(*x, *y, 1e-9), "{:?} vs {:?}", x, y);
                }
            }

            #[test]
            fn raising_lm_threshold_only_removes_entries(
                a in signal(50), b in signal(50), t1 in 0.0f64..1.0, t2 in 0.0f64..1.0,
            ) {
                let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
                let m = compute_matrix(&record(a, b, 10.0), &small_cfg(Method::Lm, DistanceKind::Manhattan)).unwrap();
                let loose = extract_causal_vector(&m, Some(lo));
                let strict = extract_causal_vector(&m, Some(hi));
                prop_assert!(strict.defined_count() <= loose.defined_count());
                for (s, l) in strict.shift_samples().iter().zip(loose.shift_samples()) {
                    if s.is_some() {
                        prop_assert_eq!(s, l);
                    }
                }
            }

            #[test]
            fn lowering_td_threshold_only_removes_entries(
                a in signal(50), b in signal(50), t1 in 0.1f64..20.0, t2 in 0.1f64..20.0,
            ) {
                let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
                let m = compute_matrix(&record(a, b, 10.0), &small_cfg(Method::Td, DistanceKind::Manhattan)).unwrap();
                let strict = extract_causal_vector(&m, Some(lo));
                let loose = extract_causal_vector(&m, Some(hi));
                prop_assert!(strict.defined_count() <= loose.defined_count());
                for (s, l) in strict.shift_samples().iter().zip(loose.shift_samples()) {
                    if s.is_some() {
                        prop_assert_eq!(s, l);
                    }
                }
            }

            #[test]
            fn report_ratio_stays_in_percent_range(
                entries in proptest::collection::vec(proptest::option::of(-5i64..5), 1..60),
                step in 1usize..5, duration in 0.1f64..30.0,
            ) {
                let times: Vec<f64> = (0..entries.len()).map(|i| (i * step) as f64 / 10.0).collect();
                let cv = CausalVector::new(entries, times, 10.0).unwrap();
                let r = stability_report(&cv, &cfg_with_steps(step), duration);
                prop_assert!((0.0..=100.0).contains(&r.defined_ratio_percent()));
                let total: f64 = r.stable_runs().iter().map(|r| r.duration_s).sum();
                prop_assert!((total - cv.defined_count() as f64 * step as f64 / 10.0).abs() < 1e-9);
            }
        }
    }
}
