//! Grid sweeps over (gain, bias, width, channel length), export/import and
//! post-processing of the resulting design records.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parallel::{self, Execution};
use crate::synth::{
    Binding, DesignCandidate, Status, SynthError, SynthOptions, SynthTarget, Synthesizer,
};
use crate::techcard::{Limit, TechnologyCard};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Column order of the CSV export.
pub const CSV_COLUMNS: [&str; 18] = [
    "l_ch",
    "w1",
    "id",
    "gain_target",
    "ls",
    "lg",
    "cx",
    "ld",
    "qd",
    "c1",
    "cp",
    "gain_db",
    "s11_db",
    "s22_db",
    "nf_db",
    "iip3_dbm",
    "status",
    "binding",
];

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("empty sweep axis: {0}")]
    EmptyAxis(&'static str),
    #[error("non-positive value on sweep axis {axis}: {value}")]
    BadAxisValue { axis: &'static str, value: f64 },
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed record on line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("cannot merge results from different technology cards ({0} vs {1})")]
    TechMismatch(String, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    /// Width × bias current at one gain target.
    WxId,
    /// Gain target × width at one bias current.
    GainxW,
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepKind::WxId => "wxid",
            SweepKind::GainxW => "gainxw",
        })
    }
}

/// Width grid of one channel length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelGrid {
    pub l_ch: f64,
    pub widths: Vec<f64>,
}

impl ChannelGrid {
    /// Widths from `lo` to `hi` inclusive in steps of `step`, rounded to the
    /// picometre so that 16e-6 + 3·8e-6 exports as 4e-5.
    pub fn stepped(l_ch: f64, lo: f64, hi: f64, step: f64) -> Self {
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        Self {
            l_ch,
            widths: (0..=n)
                .map(|k| ((lo + k as f64 * step) * 1e12).round() / 1e12)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub kind: SweepKind,
    pub channels: Vec<ChannelGrid>,
    pub ids: Vec<f64>,
    pub gains_db: Vec<f64>,
    pub gain_tol_db: f64,
    pub match_floor_db: f64,
}

fn default_channels() -> Vec<ChannelGrid> {
    vec![
        ChannelGrid::stepped(120e-9, 16e-6, 104e-6, 8e-6),
        ChannelGrid::stepped(240e-9, 32e-6, 208e-6, 16e-6),
    ]
}

impl SweepPlan {
    pub fn new(kind: SweepKind) -> Self {
        let (ids, gains_db) = match kind {
            SweepKind::WxId => (vec![0.3e-3, 0.4e-3, 0.5e-3, 0.6e-3, 0.7e-3], vec![10.5]),
            SweepKind::GainxW => (vec![0.4e-3], vec![10.5, 11.0, 12.0, 13.0]),
        };
        Self {
            kind,
            channels: default_channels(),
            ids,
            gains_db,
            gain_tol_db: 0.5,
            match_floor_db: -15.0,
        }
    }

    pub fn validate(&self) -> Result<(), ExploreError> {
        if self.channels.is_empty() {
            return Err(ExploreError::EmptyAxis("l_ch"));
        }
        if self.ids.is_empty() {
            return Err(ExploreError::EmptyAxis("id"));
        }
        if self.gains_db.is_empty() {
            return Err(ExploreError::EmptyAxis("gain"));
        }
        for ch in &self.channels {
            if ch.widths.is_empty() {
                return Err(ExploreError::EmptyAxis("w1"));
            }
            let axes =
                std::iter::once(("l_ch", ch.l_ch)).chain(ch.widths.iter().map(|&w| ("w1", w)));
            for (axis, value) in axes {
                if !(value.is_finite() && value > 0.0) {
                    return Err(ExploreError::BadAxisValue { axis, value });
                }
            }
        }
        for &value in &self.ids {
            if !(value.is_finite() && value > 0.0) {
                return Err(ExploreError::BadAxisValue { axis: "id", value });
            }
        }
        Ok(())
    }

    /// Every grid point, ordered by channel length, gain, current, width.
    pub fn targets(&self) -> Vec<SynthTarget> {
        let mut out = Vec::new();
        for ch in &self.channels {
            for &gain_db in &self.gains_db {
                for &id in &self.ids {
                    for &w1 in &ch.widths {
                        out.push(SynthTarget {
                            gain_db,
                            gain_tol_db: self.gain_tol_db,
                            id,
                            w1,
                            l_ch: ch.l_ch,
                            match_floor_db: self.match_floor_db,
                        });
                    }
                }
            }
        }
        out
    }
}

/// One grid point, flattened for export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub l_ch: f64,
    pub w1: f64,
    pub id: f64,
    pub gain_target: f64,
    pub ls: f64,
    pub lg: f64,
    pub cx: f64,
    pub ld: f64,
    pub qd: f64,
    pub c1: f64,
    pub cp: f64,
    pub gain_db: Option<f64>,
    pub s11_db: Option<f64>,
    pub s22_db: Option<f64>,
    pub nf_db: Option<f64>,
    pub iip3_dbm: Option<f64>,
    pub status: Status,
    pub binding: BTreeSet<Binding>,
}

impl From<&DesignCandidate> for SweepRecord {
    fn from(c: &DesignCandidate) -> Self {
        let p = &c.passives;
        let m = c.metrics.as_ref();
        Self {
            l_ch: c.target.l_ch,
            w1: c.target.w1,
            id: c.target.id,
            gain_target: c.target.gain_db,
            ls: p.ls.l,
            lg: p.lg.l,
            cx: p.cx,
            ld: p.ld.l,
            qd: p.ld.q,
            c1: p.c1,
            cp: p.cp,
            gain_db: m.map(|m| m.gain_db),
            s11_db: m.map(|m| m.s11_db),
            s22_db: m.map(|m| m.s22_db),
            nf_db: m.map(|m| m.nf_db),
            iip3_dbm: m.and_then(|m| m.iip3_dbm),
            status: c.verdict.status,
            binding: c.verdict.binding.clone(),
        }
    }
}

impl SweepRecord {
    pub fn is_feasible(&self) -> bool {
        self.status == Status::Feasible
    }

    fn sort_key(&self) -> [f64; 4] {
        [self.l_ch, self.gain_target, self.id, self.w1]
    }

    fn binding_field(&self) -> String {
        self.binding
            .iter()
            .map(|b| b.name())
            .collect::<Vec<_>>()
            .join("|")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tech_hash: String,
    pub engine_version: String,
    /// Absent for results imported from CSV, which does not record it.
    pub kind: Option<SweepKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub provenance: Provenance,
    pub records: Vec<SweepRecord>,
}

/// Synthesize every point of `plan`. Records come back in grid order whatever
/// the execution strategy.
pub fn run_sweep(
    plan: &SweepPlan,
    tech: &TechnologyCard,
    exec: Execution,
) -> Result<SweepResult, ExploreError> {
    let synth = Synthesizer::new(tech, SynthOptions::default())?;
    run_sweep_with(plan, &synth, exec)
}

/// As [`run_sweep`], reusing a prepared synthesizer.
pub fn run_sweep_with(
    plan: &SweepPlan,
    synth: &Synthesizer,
    exec: Execution,
) -> Result<SweepResult, ExploreError> {
    plan.validate()?;
    let targets = plan.targets();
    let outcomes = parallel::map_with(&targets, exec, |t| synth.synthesize(t));
    let records = outcomes
        .into_iter()
        .map(|o| o.map(|c| SweepRecord::from(&c)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepResult {
        provenance: Provenance {
            tech_hash: synth.tech().hash(),
            engine_version: ENGINE_VERSION.to_string(),
            kind: Some(plan.kind),
        },
        records,
    })
}

/// Combine two results from the same technology card, in grid order.
pub fn merge(a: SweepResult, b: SweepResult) -> Result<SweepResult, ExploreError> {
    if a.provenance.tech_hash != b.provenance.tech_hash {
        return Err(ExploreError::TechMismatch(
            a.provenance.tech_hash,
            b.provenance.tech_hash,
        ));
    }
    let mut records = a.records;
    records.extend(b.records);
    records.sort_by(|x, y| {
        let (kx, ky) = (x.sort_key(), y.sort_key());
        kx.iter()
            .zip(ky.iter())
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(SweepResult {
        provenance: a.provenance,
        records,
    })
}

/// Shortest text that parses back to the same f64; scientific notation for
/// very small or large magnitudes.
pub fn format_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-3..1e7).contains(&a) || !v.is_finite() {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

/// CSV export. Floats use the shortest representation that round-trips.
pub fn write_csv<W: Write>(result: &SweepResult, out: W) -> Result<(), ExploreError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in &result.records {
        w.write_record([
            format_f64(r.l_ch),
            format_f64(r.w1),
            format_f64(r.id),
            format_f64(r.gain_target),
            format_f64(r.ls),
            format_f64(r.lg),
            format_f64(r.cx),
            format_f64(r.ld),
            format_f64(r.qd),
            format_f64(r.c1),
            format_f64(r.cp),
            opt(r.gain_db),
            opt(r.s11_db),
            opt(r.s22_db),
            opt(r.nf_db),
            opt(r.iip3_dbm),
            r.status.to_string(),
            r.binding_field(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn malformed(line: usize, reason: impl Into<String>) -> ExploreError {
    ExploreError::Malformed {
        line,
        reason: reason.into(),
    }
}

/// Read records written by [`write_csv`]. The CSV carries no provenance, so the
/// caller supplies it.
pub fn read_csv<R: Read>(input: R, provenance: Provenance) -> Result<SweepResult, ExploreError> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(malformed(1, "unexpected header"));
    }
    let mut records = Vec::new();
    for (k, row) in rd.records().enumerate() {
        let row = row?;
        let line = k + 2;
        let num = |i: usize| -> Result<f64, ExploreError> {
            row[i].parse::<f64>().map_err(|_| {
                malformed(
                    line,
                    format!("{}: not a number: {:?}", CSV_COLUMNS[i], &row[i]),
                )
            })
        };
        let maybe = |i: usize| -> Result<Option<f64>, ExploreError> {
            if row[i].is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        let status = match &row[16] {
            "feasible" => Status::Feasible,
            "infeasible" => Status::Infeasible,
            other => return Err(malformed(line, format!("status {other:?}"))),
        };
        let mut binding = BTreeSet::new();
        for name in row[17].split('|').filter(|s| !s.is_empty()) {
            binding.insert(
                Binding::parse(name).ok_or_else(|| malformed(line, format!("binding {name:?}")))?,
            );
        }
        records.push(SweepRecord {
            l_ch: num(0)?,
            w1: num(1)?,
            id: num(2)?,
            gain_target: num(3)?,
            ls: num(4)?,
            lg: num(5)?,
            cx: num(6)?,
            ld: num(7)?,
            qd: num(8)?,
            c1: num(9)?,
            cp: num(10)?,
            gain_db: maybe(11)?,
            s11_db: maybe(12)?,
            s22_db: maybe(13)?,
            nf_db: maybe(14)?,
            iip3_dbm: maybe(15)?,
            status,
            binding,
        });
    }
    Ok(SweepResult {
        provenance,
        records,
    })
}

pub fn write_json<W: Write>(result: &SweepResult, out: W) -> Result<(), ExploreError> {
    serde_json::to_writer_pretty(out, result)?;
    Ok(())
}

pub fn read_json<R: Read>(input: R) -> Result<SweepResult, ExploreError> {
    Ok(serde_json::from_reader(input)?)
}

/// Application requirements a feasible design must also meet.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpecFilter {
    pub min_gain_db: Option<f64>,
    pub max_nf_db: Option<f64>,
    pub min_iip3_dbm: Option<f64>,
    /// S11 and S22 must be at or below this (dB).
    pub match_ceiling_db: Option<f64>,
}

impl SpecFilter {
    /// IEEE 802.15.4 receiver front end: NF below 3 dB, IIP3 above −4 dBm.
    pub fn zigbee() -> Self {
        Self {
            max_nf_db: Some(3.0),
            min_iip3_dbm: Some(-4.0),
            ..Self::default()
        }
    }

    pub fn passes(&self, r: &SweepRecord) -> bool {
        fn at_least(v: Option<f64>, bound: Option<f64>) -> bool {
            match bound {
                None => true,
                Some(b) => v.is_some_and(|v| v > b),
            }
        }
        fn at_most(v: Option<f64>, bound: Option<f64>) -> bool {
            match bound {
                None => true,
                Some(b) => v.is_some_and(|v| v < b),
            }
        }
        r.is_feasible()
            && at_least(r.gain_db, self.min_gain_db)
            && at_most(r.nf_db, self.max_nf_db)
            && at_least(r.iip3_dbm, self.min_iip3_dbm)
            && at_most(r.s11_db, self.match_ceiling_db)
            && at_most(r.s22_db, self.match_ceiling_db)
    }
}

pub fn spec_filter<'a>(records: &'a [SweepRecord], filter: &SpecFilter) -> Vec<&'a SweepRecord> {
    records.iter().filter(|r| filter.passes(r)).collect()
}

/// Edge of the design space a record can sit on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Extreme {
    /// Highest gain target of the sweep.
    MaxGm,
    /// Lowest bias current of the sweep.
    MinId,
    /// Narrowest width of the record's channel length.
    MinW1,
    /// Widest width of the record's channel length.
    MaxW1,
}

impl Extreme {
    pub const ALL: [Extreme; 4] = [
        Extreme::MaxGm,
        Extreme::MinId,
        Extreme::MinW1,
        Extreme::MaxW1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Extreme::MaxGm => "MaxGm",
            Extreme::MinId => "MinId",
            Extreme::MinW1 => "MinW1",
            Extreme::MaxW1 => "MaxW1",
        }
    }
}

/// How a limit is expected to show up at an edge of the design space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expectation {
    Primary,
    Secondary,
    PrimaryAndSecondary,
    Absent,
}

impl Expectation {
    pub fn symbol(self) -> &'static str {
        match self {
            Expectation::Primary => "P",
            Expectation::Secondary => "S",
            Expectation::PrimaryAndSecondary => "P+S",
            Expectation::Absent => "--",
        }
    }

    pub fn is_primary(self) -> bool {
        matches!(
            self,
            Expectation::Primary | Expectation::PrimaryAndSecondary
        )
    }
}

/// Reference binding pattern, indexed in [`Extreme::ALL`] order.
pub fn expected_pattern(limit: Limit) -> Option<[Expectation; 4]> {
    use Expectation::*;
    match limit {
        Limit::LsMin => Some([Primary, Secondary, Absent, Secondary]),
        Limit::LgMax => Some([Primary, PrimaryAndSecondary, Primary, Secondary]),
        Limit::CxMin => Some([Primary, PrimaryAndSecondary, Absent, PrimaryAndSecondary]),
        Limit::CMax => None,
    }
}

/// Count of infeasible records binding each limit at each edge of the space.
/// Edges whose axis has a single value are not applicable and absent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BindingMatrix {
    pub counts: BTreeMap<(Binding, Extreme), usize>,
    pub applicable: BTreeSet<Extreme>,
}

impl BindingMatrix {
    pub fn count(&self, b: Binding, e: Extreme) -> Option<usize> {
        self.applicable
            .contains(&e)
            .then(|| self.counts.get(&(b, e)).copied().unwrap_or(0))
    }
}

fn distinct(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

pub fn binding_matrix(records: &[SweepRecord]) -> BindingMatrix {
    let mut m = BindingMatrix::default();
    let gains = distinct(records.iter().map(|r| r.gain_target));
    let ids = distinct(records.iter().map(|r| r.id));
    let mut widths: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for r in records {
        widths.entry(r.l_ch.to_bits()).or_default().push(r.w1);
    }
    let w_range: BTreeMap<u64, (f64, f64)> = widths
        .into_iter()
        .filter_map(|(k, v)| {
            let d = distinct(v.into_iter());
            (d.len() >= 2).then(|| (k, (d[0], d[d.len() - 1])))
        })
        .collect();
    if gains.len() >= 2 {
        m.applicable.insert(Extreme::MaxGm);
    }
    if ids.len() >= 2 {
        m.applicable.insert(Extreme::MinId);
    }
    if !w_range.is_empty() {
        m.applicable.insert(Extreme::MinW1);
        m.applicable.insert(Extreme::MaxW1);
    }
    for r in records.iter().filter(|r| !r.is_feasible()) {
        let mut at = Vec::new();
        if gains.len() >= 2 && r.gain_target == gains[gains.len() - 1] {
            at.push(Extreme::MaxGm);
        }
        if ids.len() >= 2 && r.id == ids[0] {
            at.push(Extreme::MinId);
        }
        if let Some(&(lo, hi)) = w_range.get(&r.l_ch.to_bits()) {
            if r.w1 == lo {
                at.push(Extreme::MinW1);
            }
            if r.w1 == hi {
                at.push(Extreme::MaxW1);
            }
        }
        for &b in &r.binding {
            for &e in &at {
                *m.counts.entry((b, e)).or_insert(0) += 1;
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(w1: f64, id: f64, gain: f64, binding: &[Binding]) -> SweepRecord {
        let feasible = binding.is_empty();
        SweepRecord {
            l_ch: 120e-9,
            w1,
            id,
            gain_target: gain,
            ls: 1.5e-9,
            lg: 8e-9,
            cx: 0.1e-12,
            ld: 9.5e-9,
            qd: 13.0,
            c1: 0.5e-12,
            cp: 1.5e-12,
            gain_db: feasible.then_some(gain),
            s11_db: feasible.then_some(-20.0),
            s22_db: feasible.then_some(-20.0),
            nf_db: feasible.then_some(2.0),
            iip3_dbm: feasible.then_some(-2.0),
            status: if feasible {
                Status::Feasible
            } else {
                Status::Infeasible
            },
            binding: binding.iter().copied().collect(),
        }
    }

    fn result(records: Vec<SweepRecord>) -> SweepResult {
        SweepResult {
            provenance: Provenance {
                tech_hash: "00".into(),
                engine_version: ENGINE_VERSION.into(),
                kind: Some(SweepKind::WxId),
            },
            records,
        }
    }

    #[test]
    fn default_plans_cover_expected_grid() {
        let plan = SweepPlan::new(SweepKind::WxId);
        assert_eq!(plan.channels[0].widths.len(), 12);
        assert_eq!(plan.channels[1].widths.len(), 12);
        assert!((plan.channels[0].widths[11] - 104e-6).abs() < 1e-12);
        assert_eq!(plan.targets().len(), 2 * 12 * 5);
        assert_eq!(
            SweepPlan::new(SweepKind::GainxW).targets().len(),
            2 * 12 * 4
        );
    }

    #[test]
    fn empty_axis_is_rejected() {
        let mut plan = SweepPlan::new(SweepKind::WxId);
        plan.ids.clear();
        assert!(matches!(
            plan.validate(),
            Err(ExploreError::EmptyAxis("id"))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let r = result(vec![
            record(16e-6, 0.3e-3, 10.5, &[Binding::LgMax, Binding::LsMin]),
            record(24e-6, 0.3e-3, 10.5, &[]),
        ]);
        let mut buf = Vec::new();
        write_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("l_ch,w1,id,gain_target,ls,lg,cx,ld,qd,c1,cp,gain_db"));
        assert!(text.contains("infeasible,LsMin|LgMax"));
        let back = read_csv(buf.as_slice(), r.provenance.clone()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn float_text_round_trips() {
        for v in [
            0.0,
            1.2e-10,
            3.0e-13,
            120e-9,
            10.5,
            -15.25,
            2.45e9,
            1.0 / 3.0,
            -0.0004,
        ] {
            assert_eq!(format_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_f64(1.2e-10), "1.2e-10");
        assert_eq!(format_f64(10.5), "10.5");
    }

    #[test]
    fn json_round_trip() {
        let r = result(vec![record(16e-6, 0.3e-3, 10.5, &[Binding::CxMin])]);
        let mut buf = Vec::new();
        write_json(&r, &mut buf).unwrap();
        assert_eq!(read_json(buf.as_slice()).unwrap(), r);
    }

    #[test]
    fn bad_status_is_reported_with_line() {
        let mut buf = Vec::new();
        write_csv(&result(vec![record(16e-6, 0.3e-3, 10.5, &[])]), &mut buf).unwrap();
        let text = String::from_utf8(buf)
            .unwrap()
            .replace(",feasible,", ",maybe,");
        let prov = result(vec![]).provenance;
        match read_csv(text.as_bytes(), prov) {
            Err(ExploreError::Malformed { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn merge_orders_and_checks_tech() {
        let a = result(vec![record(24e-6, 0.3e-3, 10.5, &[])]);
        let b = result(vec![record(16e-6, 0.3e-3, 10.5, &[])]);
        let m = merge(a.clone(), b).unwrap();
        assert_eq!(m.records[0].w1, 16e-6);
        let mut c = a.clone();
        c.provenance.tech_hash = "ff".into();
        assert!(matches!(merge(a, c), Err(ExploreError::TechMismatch(..))));
    }

    #[test]
    fn zigbee_filter() {
        let f = SpecFilter::zigbee();
        let good = record(16e-6, 0.3e-3, 10.5, &[]);
        assert!(f.passes(&good));
        let mut noisy = good.clone();
        noisy.nf_db = Some(3.5);
        assert!(!f.passes(&noisy));
        let mut weak = good.clone();
        weak.iip3_dbm = Some(-6.0);
        assert!(!f.passes(&weak));
        assert!(!f.passes(&record(16e-6, 0.3e-3, 10.5, &[Binding::LgMax])));
    }

    #[test]
    fn binding_matrix_counts_edges() {
        let recs = vec![
            record(16e-6, 0.3e-3, 10.5, &[Binding::LgMax]),
            record(24e-6, 0.3e-3, 10.5, &[]),
            record(32e-6, 0.4e-3, 10.5, &[Binding::CxMin]),
        ];
        let m = binding_matrix(&recs);
        assert_eq!(m.count(Binding::LgMax, Extreme::MinW1), Some(1));
        assert_eq!(m.count(Binding::LgMax, Extreme::MinId), Some(1));
        assert_eq!(m.count(Binding::CxMin, Extreme::MaxW1), Some(1));
        assert_eq!(m.count(Binding::CxMin, Extreme::MinId), Some(0));
        // Single gain target: the gain edge does not exist.
        assert_eq!(m.count(Binding::LgMax, Extreme::MaxGm), None);
    }
}
