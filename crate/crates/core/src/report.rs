//! Plain-text summary of a sweep result.

use std::fmt::Write;

use crate::explorer::{
    binding_matrix, expected_pattern, format_f64, spec_filter, Extreme, SpecFilter, SweepResult,
};
use crate::synth::Binding;
use crate::techcard::Limit;

/// Counts, binding breakdown, the edge-of-space binding matrix and, when a
/// filter is given, how many feasible designs pass it.
pub fn summary(result: &SweepResult, filter: Option<(&str, &SpecFilter)>) -> String {
    let records = &result.records;
    let feasible = records.iter().filter(|r| r.is_feasible()).count();
    let mut s = String::new();
    let p = &result.provenance;
    writeln!(s, "tech: {}", p.tech_hash).unwrap();
    writeln!(s, "engine: {}", p.engine_version).unwrap();
    if let Some(kind) = p.kind {
        writeln!(s, "sweep: {kind}").unwrap();
    }
    writeln!(s, "points: {}", records.len()).unwrap();
    writeln!(s, "feasible: {feasible}").unwrap();
    writeln!(s, "infeasible: {}", records.len() - feasible).unwrap();
    for b in Binding::ALL {
        let n = records.iter().filter(|r| r.binding.contains(&b)).count();
        writeln!(s, "  {:<10} {n}", b.name()).unwrap();
    }

    let m = binding_matrix(records);
    writeln!(s, "binding matrix (count / expected):").unwrap();
    write!(s, "{:<8}", "").unwrap();
    for e in Extreme::ALL {
        write!(s, "{:>12}", e.name()).unwrap();
    }
    s.push('\n');
    for limit in [Limit::LsMin, Limit::LgMax, Limit::CxMin] {
        write!(s, "{:<8}", limit.to_string()).unwrap();
        let expected = expected_pattern(limit).expect("pattern exists for inductor and Cx limits");
        for (e, x) in Extreme::ALL.into_iter().zip(expected) {
            let cell = match m.count(limit.into(), e) {
                Some(n) => format!("{n} / {}", x.symbol()),
                None => format!("n/a / {}", x.symbol()),
            };
            write!(s, "{cell:>12}").unwrap();
        }
        s.push('\n');
    }

    if let Some((name, f)) = filter {
        let passing = spec_filter(records, f);
        writeln!(
            s,
            "filter {name}: {} of {feasible} feasible designs pass",
            passing.len()
        )
        .unwrap();
        if let Some(best) = passing.iter().min_by(|a, b| {
            a.nf_db
                .unwrap_or(f64::INFINITY)
                .total_cmp(&b.nf_db.unwrap_or(f64::INFINITY))
        }) {
            writeln!(
                s,
                "  lowest NF: {:.2} dB at l_ch={} w1={} id={} gain_target={}",
                best.nf_db.unwrap_or(f64::NAN),
                format_f64(best.l_ch),
                format_f64(best.w1),
                format_f64(best.id),
                format_f64(best.gain_target)
            )
            .unwrap();
        }
    }
    s
}
