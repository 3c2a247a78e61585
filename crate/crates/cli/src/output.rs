//! Delimited-text and JSON writers. Every numeric cell uses the shortest decimal
//! form that parses back to the identical value, so files diff cleanly and
//! re-reading loses nothing.

use std::fmt::Write as _;
use std::path::Path;

use platoon::scenario::{MetricsSummary, TrajectoryLog};
use platoon::stability::{FrequencyResponse, RegionPoint, StabilityReport};

use crate::CliError;

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn trajectory_csv(log: &TrajectoryLog<f64>) -> String {
    let mut out = String::from("t_s");
    for i in 0..log.vehicles.len() {
        let _ = write!(out, ",p{i}_m,v{i}_mps,a{i}_mps2,u{i}_mps2");
        if i > 0 {
            let _ = write!(out, ",e{i}_m");
        }
    }
    out.push('\n');
    for j in 0..log.rows() {
        let _ = write!(out, "{}", log.times[j]);
        for (i, trace) in log.vehicles.iter().enumerate() {
            let _ = write!(
                out,
                ",{},{},{},{}",
                trace.p[j], trace.v[j], trace.a[j], trace.u[j]
            );
            if i > 0 {
                let _ = write!(out, ",{}", trace.e[j]);
            }
        }
        out.push('\n');
    }
    out
}

pub fn metrics_csv(summary: &MetricsSummary<f64>) -> String {
    let mut out = String::from(
        "follower,peak_abs_error_m,t_peak_s,rms_error_m,final_error_m,window_peak_m,window_ratio_to_prev\n",
    );
    for (k, f) in summary.followers.iter().enumerate() {
        let ratio = if k == 0 {
            String::new()
        } else {
            format!("{}", summary.window_peak_ratios[k - 1])
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            k + 1,
            f.peak_abs_error,
            f.t_peak,
            f.rms_error,
            f.final_error,
            summary.window_peaks[k],
            ratio
        );
    }
    out
}

pub fn stability_report_csv(report: &StabilityReport<f64>) -> String {
    let mut out = String::from("quantity,value,ok\n");
    let mut row = |name: &str, value: Option<f64>, ok: bool| {
        let value = value.map(|v| format!("{v}")).unwrap_or_default();
        let _ = writeln!(out, "{name},{value},{ok}");
    };
    let i = &report.internal;
    row("position_gain", Some(i.kp_positive.value), i.kp_positive.ok);
    row("accel_gain", Some(i.ka_positive.value), i.ka_positive.ok);
    row(
        "characteristic_margin",
        Some(i.characteristic_nonzero.value),
        i.characteristic_nonzero.ok,
    );
    row(
        "coupling_margin",
        Some(i.coupling_margin.value),
        i.coupling_margin.ok,
    );
    row(
        "delay_activity_product",
        Some(i.delay_product.value),
        i.delay_product.ok,
    );
    let s = &report.string;
    row(
        "velocity_gain_margin",
        Some(s.velocity_gain_margin.value),
        s.velocity_gain_margin.ok,
    );
    row(
        "headway_lag_balance",
        Some(s.headway_lag_balance.value),
        s.headway_lag_balance.ok,
    );
    row(
        "accel_gain_bound",
        Some(s.accel_gain_bound.value),
        s.accel_gain_bound.ok,
    );
    row(
        "lag_vs_delay",
        Some(s.lag_vs_delay.value),
        s.lag_vs_delay.ok,
    );
    row(
        "damping_budget",
        Some(s.damping_budget.value),
        s.damping_budget.ok,
    );
    for (k, check) in s.predecessor_weights.iter().enumerate() {
        row(
            &format!("predecessor_weight_{}", k + 1),
            Some(check.value),
            check.ok,
        );
    }
    row("min_headway", report.h_min, report.headway_ok);
    row("headway", Some(report.params.h), report.headway_ok);
    for (k, &norm) in report.hinf_norms.iter().enumerate() {
        row(
            &format!("hinf_norm_{}", k + 1),
            Some(norm),
            norm <= report.hinf_bound + 1e-9,
        );
    }
    row("hinf_bound", Some(report.hinf_bound), report.norms_ok);
    row(
        "certified",
        Some(if report.certified() { 1.0 } else { 0.0 }),
        report.certified(),
    );
    out
}

pub fn freq_response_csv(resp: &FrequencyResponse<f64>) -> String {
    let mut out = String::from("omega_radps");
    for l in 1..=resp.magnitudes.len() {
        let _ = write!(out, ",mag_l{l}");
    }
    out.push_str(",bound\n");
    for (k, &omega) in resp.omegas.iter().enumerate() {
        let _ = write!(out, "{omega}");
        for curve in &resp.magnitudes {
            let _ = write!(out, ",{}", curve[k]);
        }
        let _ = writeln!(out, ",{}", resp.bound);
    }
    out
}

pub fn region_csv(points: &[RegionPoint<f64>], with_norms: bool) -> String {
    let mut out =
        String::from("tau,kp,kv,ka,h,delta,r,internal_ok,conditions_ok,min_headway,headway_ok");
    let norm_count = points
        .first()
        .and_then(|p| p.hinf_norms.as_ref().map(Vec::len))
        .unwrap_or(0);
    if with_norms {
        for l in 1..=norm_count {
            let _ = write!(out, ",hinf_norm_{l}");
        }
        out.push_str(",norms_ok");
    }
    out.push_str(",certified\n");
    for p in points {
        let h_min = p.h_min.map(|v| format!("{v}")).unwrap_or_default();
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            p.params.tau,
            p.params.gains.kp,
            p.params.gains.kv,
            p.params.gains.ka,
            p.params.h,
            p.params.delta,
            p.params.r,
            p.internal_ok,
            p.conditions_ok,
            h_min,
            p.headway_ok
        );
        if with_norms {
            if let Some(norms) = &p.hinf_norms {
                for &n in norms {
                    let _ = write!(out, ",{n}");
                }
            } else {
                for _ in 0..norm_count {
                    out.push(',');
                }
            }
            let _ = write!(out, ",{}", p.norms_ok.unwrap_or(false));
        }
        let _ = writeln!(out, ",{}", p.certified());
    }
    out
}
