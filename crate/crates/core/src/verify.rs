//! Cross-checks: closed form against brute force, structural FBCT/DDT
//! properties of arbitrary S-boxes, and spectrum identities.

use std::collections::HashMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closedform::ClosedForm;
use crate::error::Result;
use crate::gf2n::FieldSpec;
use crate::sbox::SBox;
use crate::spectrum::{Domain, Spectrum};
use crate::tables::{self, SparseTable, Table2D, TableKind, MAX_SPARSE_DEGREE};

pub const DEFAULT_MISMATCH_CAP: usize = 100;
pub const DEFAULT_ZERO_SAMPLES: usize = 1_000_000;
/// FBDT/FBET are swept tuple by tuple up to this many cells; beyond it the
/// nonzero support is checked exactly and predicted zeros are sampled.
pub const EXHAUSTIVE_TUPLE_LIMIT: u128 = 1 << 18;

/// One disagreement. For spectrum checks `coords` holds the table value
/// and the counts are multiplicities; for property checks `case_label`
/// names the property.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub coords: Vec<u32>,
    pub predicted: u128,
    pub observed: u128,
    pub case_label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub subject: String,
    pub n: u32,
    pub modulus: u32,
    pub table: Option<TableKind>,
    pub mode: String,
    pub checked_cells: u64,
    /// First `mismatch_cap` mismatches, in deterministic order.
    pub mismatches: Vec<Mismatch>,
    pub mismatch_count: u64,
    pub mismatch_cap: usize,
    pub seed: Option<u64>,
    pub notes: Vec<String>,
    pub passed: bool,
    /// Wall time in seconds; absent once cleared for reproducible output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed: Option<f64>,
}

impl VerifyReport {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{}: {} ({} cells checked, {} mismatches",
            self.subject,
            if self.passed { "PASS" } else { "FAIL" },
            self.checked_cells,
            self.mismatch_count,
        );
        if let Some(secs) = self.elapsed {
            out.push_str(&format!(", {secs:.3}s"));
        }
        out.push_str(")\n");
        for m in &self.mismatches {
            let coords: Vec<String> = m.coords.iter().map(|c| format!("{c:#x}")).collect();
            out.push_str(&format!(
                "  [{}] predicted {} observed {} ({})\n",
                coords.join(", "),
                m.predicted,
                m.observed,
                m.case_label
            ));
        }
        if self.mismatch_count > self.mismatches.len() as u64 {
            out.push_str(&format!(
                "  ... {} more\n",
                self.mismatch_count - self.mismatches.len() as u64
            ));
        }
        for note in &self.notes {
            out.push_str(&format!("  note: {note}\n"));
        }
        out
    }
}

struct ReportBuilder {
    report: VerifyReport,
    started: Instant,
}

impl ReportBuilder {
    fn new(subject: String, spec: &FieldSpec, table: Option<TableKind>, cap: usize) -> Self {
        ReportBuilder {
            report: VerifyReport {
                subject,
                n: spec.n(),
                modulus: spec.modulus(),
                table,
                mode: String::new(),
                checked_cells: 0,
                mismatches: Vec::new(),
                mismatch_count: 0,
                mismatch_cap: cap,
                seed: None,
                notes: Vec::new(),
                passed: false,
                elapsed: None,
            },
            started: Instant::now(),
        }
    }

    fn push(&mut self, m: Mismatch) {
        self.report.mismatch_count += 1;
        if self.report.mismatches.len() < self.report.mismatch_cap {
            self.report.mismatches.push(m);
        }
    }

    fn extend(&mut self, ms: impl IntoIterator<Item = Mismatch>) {
        for m in ms {
            self.push(m);
        }
    }

    fn check(&mut self, label: &str, coords: &[u32], expected: u128, observed: u128) {
        self.report.checked_cells += 1;
        if expected != observed {
            self.push(Mismatch {
                coords: coords.to_vec(),
                predicted: expected,
                observed,
                case_label: label.to_string(),
            });
        }
    }

    fn finish(mut self) -> VerifyReport {
        self.report.passed = self.report.mismatch_count == 0;
        self.report.elapsed = Some(self.started.elapsed().as_secs_f64());
        self.report
    }
}

fn mismatch(coords: Vec<u32>, predicted: u32, observed: u32, label: &str) -> Mismatch {
    Mismatch {
        coords,
        predicted: predicted as u128,
        observed: observed as u128,
        case_label: label.to_string(),
    }
}

/// Verification settings: mismatch cap, sampling seed and sample size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Verifier {
    pub mismatch_cap: usize,
    pub seed: u64,
    pub zero_samples: usize,
    /// Sweep every FBDT/FBET tuple regardless of size.
    pub force_exhaustive: bool,
}

impl Default for Verifier {
    fn default() -> Self {
        Verifier {
            mismatch_cap: DEFAULT_MISMATCH_CAP,
            seed: 0,
            zero_samples: DEFAULT_ZERO_SAMPLES,
            force_exhaustive: false,
        }
    }
}

impl Verifier {
    /// Compares every cell of `table` (or, for large FBDT/FBET, the full
    /// nonzero support plus sampled predicted-zero tuples) between the
    /// closed form and brute force on `x^(2^(m+1)-1)`.
    pub fn entrywise(&self, spec: &FieldSpec, table: TableKind) -> Result<VerifyReport> {
        let sparse = table.arity() > 2;
        tables::check_budget(table, spec.n(), sparse)?;
        let cf = ClosedForm::new(spec);
        let s = SBox::closed_form_map(spec);
        let subject = format!(
            "{table} entrywise, GF(2^{}) mod {:#x}",
            spec.n(),
            spec.modulus()
        );
        let mut rb = ReportBuilder::new(subject, spec, Some(table), self.mismatch_cap);
        match table {
            TableKind::Ddt | TableKind::Fbct => {
                let brute = if table == TableKind::Ddt {
                    tables::ddt(&s)
                } else {
                    tables::fbct(&s)
                };
                rb.report.mode = "exhaustive".into();
                let (cells, ms) = compare_dense(&cf, table, &brute)?;
                rb.report.checked_cells = cells;
                rb.extend(ms);
            }
            TableKind::Fbdt | TableKind::Fbet => {
                let brute = if table == TableKind::Fbdt {
                    tables::fbdt_table(&s)
                } else {
                    tables::fbet_table(&s)
                };
                let total = brute.total_cells();
                if self.force_exhaustive || total <= EXHAUSTIVE_TUPLE_LIMIT {
                    rb.report.mode = "exhaustive".into();
                    let (cells, ms) = compare_all_tuples(&cf, table, &brute)?;
                    rb.report.checked_cells = cells;
                    rb.extend(ms);
                } else {
                    rb.report.mode = "support+sampled-zeros".into();
                    rb.report.seed = Some(self.seed);
                    let (cells, ms) = compare_support(&cf, table, &brute)?;
                    rb.report.checked_cells = cells;
                    rb.extend(ms);
                    let (cells, ms) = self.sample_zeros(&cf, &s, table)?;
                    rb.report.checked_cells += cells;
                    rb.extend(ms);
                    rb.report.notes.push(format!(
                        "nonzero support: {} cells; sampled {} predicted-zero tuples",
                        brute.support(),
                        cells
                    ));
                }
            }
            TableKind::Bct => return Err(crate::Error::NotClosedFormSBox),
        }
        Ok(rb.finish())
    }

    /// Draws uniform tuples, keeps those predicted zero, and point-counts them.
    fn sample_zeros(
        &self,
        cf: &ClosedForm,
        s: &SBox,
        table: TableKind,
    ) -> Result<(u64, Vec<Mismatch>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let q = s.size() as u32;
        let arity = table.arity();
        let mut tuples = Vec::with_capacity(self.zero_samples);
        let mut coords = vec![0u32; arity];
        while tuples.len() < self.zero_samples {
            for c in coords.iter_mut() {
                *c = rng.gen_range(0..q);
            }
            let e = cf.entry(table, &coords)?;
            if e.predicted == 0 {
                tuples.push((coords.clone(), e.case_label));
            }
        }
        let ms: Vec<Mismatch> = tuples
            .par_iter()
            .filter_map(|(c, label)| {
                let observed = match table {
                    TableKind::Fbdt => tables::fbdt_entry(s, c[0], c[1], c[2]),
                    _ => tables::fbet_entry(s, c[0], c[1], c[2], c[3]),
                };
                (observed != 0).then(|| mismatch(c.clone(), 0, observed, label))
            })
            .collect();
        Ok((tuples.len() as u64, ms))
    }

    /// Structural properties that hold for every S-box.
    pub fn structural(&self, s: &SBox) -> VerifyReport {
        let spec = s.spec();
        let q = s.size() as u32;
        let subject = match s.exponent() {
            Some(d) => format!("structural, x^{d} over GF(2^{})", spec.n()),
            None => format!("structural, lookup table over GF(2^{})", spec.n()),
        };
        let mut rb = ReportBuilder::new(subject, spec, None, self.mismatch_cap);
        rb.report.mode = "exhaustive".into();
        let ddt = tables::ddt(s);
        let fbct = tables::fbct(s);

        for a in 0..q {
            let row = ddt.row(a);
            rb.check(
                "ddt row sum",
                &[a],
                q as u128,
                row.iter().sum::<u32>() as u128,
            );
            for b in 0..q {
                let v = ddt.get(a, b);
                rb.check("ddt even", &[a, b], 0, (v % 2) as u128);
            }
        }
        for a in 0..q {
            for b in 0..q {
                let v = fbct.get(a, b) as u128;
                rb.check("fbct symmetry", &[a, b], fbct.get(b, a) as u128, v);
                rb.check("fbct multiple of 4", &[a, b], 0, v % 4);
                rb.check("fbct equalities", &[a, b], fbct.get(a, a ^ b) as u128, v);
            }
            rb.check(
                "fbct first line",
                &[0, a],
                q as u128,
                fbct.get(0, a) as u128,
            );
            rb.check(
                "fbct first column",
                &[a, 0],
                q as u128,
                fbct.get(a, 0) as u128,
            );
            rb.check("fbct diagonal", &[a, a], q as u128, fbct.get(a, a) as u128);
        }

        let apn = ddt.max_where(|a, _| a != 0) == 2;
        let fbct_zero = fbct.max_where(|a, b| a != 0 && b != 0 && a != b) == 0;
        rb.check("apn iff fbct zero", &[], apn as u128, fbct_zero as u128);

        if spec.n() <= MAX_SPARSE_DEGREE {
            let fbdt = tables::fbdt_table(s);
            let fbet = tables::fbet_table(s);
            check_marginals(&mut rb, &ddt, &fbct, &fbdt, &fbet);
        } else {
            rb.report.notes.push(format!(
                "FBDT/FBET marginals skipped above n = {MAX_SPARSE_DEGREE}"
            ));
        }
        rb.finish()
    }

    /// Brute-force spectra and uniformities of `x^(2^(m+1)-1)` against the
    /// closed-form counts, plus the differential-spectrum identities.
    pub fn spectra(&self, spec: &FieldSpec) -> Result<VerifyReport> {
        self.spectra_for(
            spec,
            &[
                TableKind::Ddt,
                TableKind::Fbct,
                TableKind::Fbdt,
                TableKind::Fbet,
            ],
        )
    }

    pub fn spectra_for(&self, spec: &FieldSpec, kinds: &[TableKind]) -> Result<VerifyReport> {
        for &k in kinds {
            tables::check_budget(k, spec.n(), false)?;
        }
        let cf = ClosedForm::new(spec);
        let s = SBox::closed_form_map(spec);
        let subject = format!("spectra, GF(2^{}) mod {:#x}", spec.n(), spec.modulus());
        let table = (kinds.len() == 1).then(|| kinds[0]);
        let mut rb = ReportBuilder::new(subject, spec, table, self.mismatch_cap);
        rb.report.mode = "exhaustive".into();
        let n = spec.n();
        let q = 1u128 << n;

        for &kind in kinds {
            let (brute, uniformity) = match kind {
                TableKind::Ddt => {
                    let t = tables::ddt(&s);
                    let diff = t.spectrum(Domain::NonzeroInputPairs);
                    rb.check("identity: sum of w_i", &[], q * (q - 1), diff.total());
                    rb.check(
                        "identity: sum of i*w_i",
                        &[],
                        q * (q - 1),
                        diff.weighted_total(),
                    );
                    (t.spectrum(Domain::Pairs), t.max_where(|a, _| a != 0))
                }
                TableKind::Fbct => {
                    let t = tables::fbct(&s);
                    let u = t.max_where(|a, b| a != 0 && b != 0 && a != b);
                    (t.spectrum(Domain::Pairs), u)
                }
                TableKind::Fbdt => {
                    let p = tables::fbdt_summary(&s);
                    (p.spectrum, p.uniformity)
                }
                TableKind::Fbet => {
                    let p = tables::fbet_summary(&s);
                    (p.spectrum, p.uniformity)
                }
                TableKind::Bct => return Err(crate::Error::NotClosedFormSBox),
            };
            let predicted = cf.spectrum(kind)?;
            let label = format!("{kind} spectrum");
            compare_spectra(&mut rb, &label, &predicted, &brute);
            rb.check(
                &format!("{kind} domain total"),
                &[],
                kind.domain().size(n),
                brute.total(),
            );
            rb.check(
                &format!("{kind} uniformity"),
                &[],
                cf.uniformity(kind)? as u128,
                uniformity as u128,
            );
            if kind == TableKind::Fbet && predicted != brute {
                let by_cases = cf.fbet_spectrum_from_cases();
                rb.report.notes.push(format!(
                    "fbet: brute force {} the count implied by the entry rules ({})",
                    if by_cases == brute {
                        "equals"
                    } else {
                        "differs from"
                    },
                    by_cases
                ));
            }
        }
        Ok(rb.finish())
    }
}

fn compare_spectra(rb: &mut ReportBuilder, label: &str, predicted: &Spectrum, observed: &Spectrum) {
    let mut values: Vec<u32> = predicted
        .iter()
        .chain(observed.iter())
        .map(|(v, _)| v)
        .collect();
    values.sort_unstable_by(|a, b| b.cmp(a));
    values.dedup();
    for v in values {
        rb.check(label, &[v], predicted.get(v), observed.get(v));
    }
}

fn compare_dense(
    cf: &ClosedForm,
    table: TableKind,
    brute: &Table2D,
) -> Result<(u64, Vec<Mismatch>)> {
    let q = brute.size() as u32;
    let rows: Vec<Result<Vec<Mismatch>>> = (0..q)
        .into_par_iter()
        .map(|a| {
            let mut out = Vec::new();
            for b in 0..q {
                let e = cf.entry(table, &[a, b])?;
                let observed = brute.get(a, b);
                if e.predicted != observed {
                    out.push(mismatch(vec![a, b], e.predicted, observed, &e.case_label));
                }
            }
            Ok(out)
        })
        .collect();
    let ms = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(((q as u64) * (q as u64), ms.into_iter().flatten().collect()))
}

fn compare_all_tuples(
    cf: &ClosedForm,
    table: TableKind,
    brute: &SparseTable,
) -> Result<(u64, Vec<Mismatch>)> {
    let q = 1u32 << brute.n();
    let arity = table.arity();
    let rows: Vec<Result<Vec<Mismatch>>> = (0..q)
        .into_par_iter()
        .map(|a| {
            let mut out = Vec::new();
            let inner = q.pow(arity as u32 - 1);
            let mut coords = vec![0u32; arity];
            coords[0] = a;
            for idx in 0..inner {
                let mut rest = idx;
                for slot in coords[1..].iter_mut().rev() {
                    *slot = rest % q;
                    rest /= q;
                }
                let e = cf.entry(table, &coords)?;
                let observed = brute.get(&coords);
                if e.predicted != observed {
                    out.push(mismatch(
                        coords.clone(),
                        e.predicted,
                        observed,
                        &e.case_label,
                    ));
                }
            }
            Ok(out)
        })
        .collect();
    let ms = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let cells = (q as u64).pow(arity as u32);
    Ok((cells, ms.into_iter().flatten().collect()))
}

fn compare_support(
    cf: &ClosedForm,
    table: TableKind,
    brute: &SparseTable,
) -> Result<(u64, Vec<Mismatch>)> {
    let cells: Vec<(Vec<u32>, u32)> = brute.iter().collect();
    let ms: Vec<Result<Option<Mismatch>>> = cells
        .par_iter()
        .map(|(coords, observed)| {
            let e = cf.entry(table, coords)?;
            Ok((e.predicted != *observed)
                .then(|| mismatch(coords.clone(), e.predicted, *observed, &e.case_label)))
        })
        .collect();
    let ms = ms.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((cells.len() as u64, ms.into_iter().flatten().collect()))
}

fn check_marginals(
    rb: &mut ReportBuilder,
    ddt: &Table2D,
    fbct: &Table2D,
    fbdt: &SparseTable,
    fbet: &SparseTable,
) {
    let q = ddt.size() as u32;

    let mut by_ab = vec![0u32; (q as usize) * (q as usize)];
    for (c, v) in fbdt.iter() {
        by_ab[((c[0] as usize) << fbdt.n()) | c[2] as usize] += v;
    }
    for a in 0..q {
        for b in 0..q {
            let sum = by_ab[((a as usize) << fbdt.n()) | b as usize];
            rb.check(
                "sum_c fbdt = fbct",
                &[a, b],
                fbct.get(a, b) as u128,
                sum as u128,
            );
        }
    }

    let mut by_acb: HashMap<(u32, u32, u32), u32> = HashMap::new();
    for (c, v) in fbet.iter() {
        *by_acb.entry((c[0], c[1], c[2])).or_insert(0) += v;
    }
    rb.check(
        "sum_d fbet = fbdt (support)",
        &[],
        fbdt.support() as u128,
        by_acb.len() as u128,
    );
    for (c, v) in fbdt.iter() {
        let sum = by_acb.get(&(c[0], c[1], c[2])).copied().unwrap_or(0);
        rb.check("sum_d fbet = fbdt", &c, v as u128, sum as u128);
    }

    for a in 0..q {
        for c in 0..q {
            let expected = ddt.get(a, c) as u128;
            rb.check(
                "fbdt(a,c,0) = ddt(a,c)",
                &[a, c, 0],
                expected,
                fbdt.get(&[a, c, 0]) as u128,
            );
            rb.check(
                "fbdt(a,c,a) = ddt(a,c)",
                &[a, c, a],
                expected,
                fbdt.get(&[a, c, a]) as u128,
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entrywise_small_fields() {
        let v = Verifier::default();
        let r = v
            .entrywise(&FieldSpec::new(3).unwrap(), TableKind::Ddt)
            .unwrap();
        assert!(r.passed, "{}", r.to_text());
        assert_eq!(r.checked_cells, 64);
        let r = v
            .entrywise(&FieldSpec::new(4).unwrap(), TableKind::Fbct)
            .unwrap();
        assert!(r.passed, "{}", r.to_text());
        assert_eq!(r.checked_cells, 256);
    }

    #[test]
    fn fbet_support_mode_at_n5() {
        let v = Verifier {
            zero_samples: 20_000,
            seed: 7,
            ..Verifier::default()
        };
        let r = v
            .entrywise(&FieldSpec::new(5).unwrap(), TableKind::Fbet)
            .unwrap();
        assert_eq!(r.mode, "support+sampled-zeros");
        assert!(r.passed, "{}", r.to_text());
        assert_eq!(r.checked_cells, 1 + 3 * 16 * 31 + 20_000);
        assert_eq!(r.seed, Some(7));
    }

    #[test]
    fn structural_on_inverse_map() {
        let s = SBox::inversion(&FieldSpec::new(4).unwrap());
        let r = Verifier::default().structural(&s);
        assert!(r.passed, "{}", r.to_text());
        assert_eq!(tables::feistel_boomerang_uniformity(&s), 4);
    }

    #[test]
    fn structural_flags_a_broken_table() {
        // the property checks must be able to fail: feed an inconsistent FBCT
        let s = SBox::power(&FieldSpec::new(3).unwrap(), 3).unwrap();
        let ddt = tables::ddt(&s);
        let mut fbct = tables::fbct(&s);
        fbct.counts[9] += 4;
        let mut rb = ReportBuilder::new("t".into(), s.spec(), None, 5);
        check_marginals(
            &mut rb,
            &ddt,
            &fbct,
            &tables::fbdt_table(&s),
            &tables::fbet_table(&s),
        );
        let r = rb.finish();
        assert!(!r.passed);
        assert_eq!(r.mismatch_count, 1);
        assert_eq!(r.mismatches[0].coords, vec![1, 1]);
    }

    #[test]
    fn spectra_report_flags_even_fbet_count() {
        let v = Verifier::default();
        let r = v.spectra(&FieldSpec::new(3).unwrap()).unwrap();
        assert!(r.passed, "{}", r.to_text());
        let r = v.spectra(&FieldSpec::new(4).unwrap()).unwrap();
        assert!(!r.passed);
        assert!(r.mismatches.iter().all(|m| m.case_label == "fbet spectrum"));
        assert!(r.notes.iter().any(|n| n.contains("equals")));
    }

    #[test]
    fn report_round_trips_through_json() {
        let r = Verifier::default()
            .spectra(&FieldSpec::new(4).unwrap())
            .unwrap();
        let json = serde_json::to_string(&r).unwrap();
        let back: VerifyReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        let untimed = VerifyReport { elapsed: None, ..r };
        let json = serde_json::to_string(&untimed).unwrap();
        assert!(!json.contains("elapsed"));
        assert_eq!(
            serde_json::from_str::<VerifyReport>(&json).unwrap(),
            untimed
        );
    }

    #[test]
    fn mismatch_cap_keeps_total() {
        let mut rb = ReportBuilder::new("t".into(), &FieldSpec::new(2).unwrap(), None, 2);
        for i in 0..5 {
            rb.check("x", &[i], 0, 1);
        }
        let r = rb.finish();
        assert_eq!(r.mismatches.len(), 2);
        assert_eq!(r.mismatch_count, 5);
        assert!(!r.passed);
    }

    #[test]
    fn budget_is_enforced() {
        let f = FieldSpec::new(13).unwrap();
        assert!(matches!(
            Verifier::default().entrywise(&f, TableKind::Ddt),
            Err(crate::Error::Budget(_))
        ));
        let f = FieldSpec::new(11).unwrap();
        assert!(matches!(
            Verifier::default().entrywise(&f, TableKind::Fbdt),
            Err(crate::Error::Budget(_))
        ));
    }
}
