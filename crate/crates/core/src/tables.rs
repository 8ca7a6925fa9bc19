//! Exhaustive DDT, BCT, FBCT, FBDT and FBET computation for arbitrary S-boxes.
//!
//! The Feistel tables and the BCT all reduce to one enumeration. For a fixed
//! input difference `a`, partition the inputs by `D_a(x) = F(x) + F(x+a)`.
//! The FBCT condition `F(x)+F(x+a)+F(x+b)+F(x+a+b) = 0` says exactly that
//! `x` and `x+b` fall in the same class, so every `(x, a, b)` satisfying it
//! is an ordered pair `(x, y)` inside one class with `b = x + y`. Walking the
//! pairs of each class visits precisely those triples, at a cost of
//! `sum(|class|^2)` per `a` instead of `2^(2n)`.
//!
//! Work is split over `a` with rayon. Each worker keeps private scratch
//! buffers and per-`a` results are merged by integer addition or collected
//! in index order, so output never depends on the thread count.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::sbox::SBox;
use crate::spectrum::{Domain, Spectrum};

/// Largest degree for dense tables and the per-`a` class enumerations.
pub const MAX_ENUMERATION_DEGREE: u32 = 12;
/// Largest degree for materializing every nonzero FBDT/FBET cell.
pub const MAX_SPARSE_DEGREE: u32 = 10;

/// Which cryptanalysis table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    Ddt,
    Bct,
    Fbct,
    Fbdt,
    Fbet,
}

impl TableKind {
    /// Coordinates per cell: `(a,b)`, `(a,c,b)` or `(a,c,b,d)`.
    pub fn arity(self) -> usize {
        match self {
            TableKind::Ddt | TableKind::Bct | TableKind::Fbct => 2,
            TableKind::Fbdt => 3,
            TableKind::Fbet => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TableKind::Ddt => "ddt",
            TableKind::Bct => "bct",
            TableKind::Fbct => "fbct",
            TableKind::Fbdt => "fbdt",
            TableKind::Fbet => "fbet",
        }
    }

    pub fn domain(self) -> Domain {
        match self.arity() {
            2 => Domain::Pairs,
            3 => Domain::Triples,
            _ => Domain::Quadruples,
        }
    }
}

impl std::fmt::Display for TableKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TableKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ddt" => Ok(TableKind::Ddt),
            "bct" => Ok(TableKind::Bct),
            "fbct" => Ok(TableKind::Fbct),
            "fbdt" => Ok(TableKind::Fbdt),
            "fbet" => Ok(TableKind::Fbet),
            other => Err(format!("unknown table kind {other:?}")),
        }
    }
}

/// Refuses full-table work beyond the supported range, with an estimate.
pub fn check_budget(kind: TableKind, n: u32, materialize_sparse: bool) -> Result<()> {
    let limit = if materialize_sparse && kind.arity() > 2 {
        MAX_SPARSE_DEGREE
    } else {
        MAX_ENUMERATION_DEGREE
    };
    if n <= limit {
        return Ok(());
    }
    let cells = 1u128 << (kind.arity() as u32 * n);
    Err(Error::Budget(format!(
        "{kind} over GF(2^{n}) spans {cells} cells and needs up to 2^{} enumeration steps; \
         the supported maximum is n = {limit}",
        3 * n
    )))
}

/// Runs `f` on a dedicated pool of `workers` threads (0 = rayon default).
pub fn with_workers<R, F>(workers: usize, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool")
        .install(f)
}

/// Dense `2^n x 2^n` table indexed `(a, b)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table2D {
    n: u32,
    pub(crate) counts: Vec<u32>,
}

impl Table2D {
    fn from_rows(n: u32, rows: Vec<Vec<u32>>) -> Self {
        Table2D {
            n,
            counts: rows.into_iter().flatten().collect(),
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn size(&self) -> usize {
        1 << self.n
    }

    #[inline]
    pub fn get(&self, a: u32, b: u32) -> u32 {
        self.counts[((a as usize) << self.n) | b as usize]
    }

    pub fn row(&self, a: u32) -> &[u32] {
        let q = self.size();
        &self.counts[a as usize * q..(a as usize + 1) * q]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.counts.chunks(self.size())
    }

    /// Spectrum over all `(a, b)`, or only rows `a != 0`.
    pub fn spectrum(&self, domain: Domain) -> Spectrum {
        let skip = match domain {
            Domain::NonzeroInputPairs => 1,
            _ => 0,
        };
        let mut s = Spectrum::new(domain);
        for row in self.rows().skip(skip) {
            for &v in row {
                s.add(v, 1);
            }
        }
        s
    }

    /// Max over cells where `keep(a, b)`; 0 if none.
    pub fn max_where(&self, keep: impl Fn(u32, u32) -> bool) -> u32 {
        let q = self.size() as u32;
        (0..q)
            .flat_map(|a| (0..q).map(move |b| (a, b)))
            .filter(|&(a, b)| keep(a, b))
            .map(|(a, b)| self.get(a, b))
            .max()
            .unwrap_or(0)
    }

    /// Header row of b values, then one row per a. Decimal counts.
    pub fn to_csv(&self) -> String {
        let q = self.size();
        let mut out = String::with_capacity(q * q * 3 + q * 8);
        out.push_str("a\\b");
        for b in 0..q {
            let _ = write!(out, ",{b}");
        }
        out.push('\n');
        for (a, row) in self.rows().enumerate() {
            let _ = write!(out, "{a}");
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn to_text(&self) -> String {
        let width = self.counts.iter().max().map_or(1, |v| v.to_string().len());
        let mut out = String::new();
        for row in self.rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>width$}")).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Serializes as nested arrays, one inner array per row `a`.
impl Serialize for Table2D {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.size()))?;
        for row in self.rows() {
            seq.serialize_element(row)?;
        }
        seq.end()
    }
}

/// Nonzero cells of an FBDT (`arity` 3) or FBET (`arity` 4).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseTable {
    n: u32,
    arity: usize,
    /// `(packed coordinates, count)`, sorted by coordinates.
    cells: Vec<(u64, u32)>,
}

impl SparseTable {
    fn pack(n: u32, coords: &[u32]) -> u64 {
        coords.iter().fold(0u64, |acc, &c| (acc << n) | c as u64)
    }

    fn unpack(&self, key: u64) -> Vec<u32> {
        let mask = (1u64 << self.n) - 1;
        (0..self.arity)
            .rev()
            .map(|i| ((key >> (i as u32 * self.n)) & mask) as u32)
            .collect()
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn total_cells(&self) -> u128 {
        1u128 << (self.arity as u32 * self.n)
    }

    /// Number of nonzero cells.
    pub fn support(&self) -> usize {
        self.cells.len()
    }

    /// Count at `coords`; cells not stored are zero.
    pub fn get(&self, coords: &[u32]) -> u32 {
        assert_eq!(coords.len(), self.arity, "coordinate arity");
        let key = Self::pack(self.n, coords);
        self.cells
            .binary_search_by_key(&key, |&(k, _)| k)
            .map_or(0, |i| self.cells[i].1)
    }

    /// Nonzero cells in lexicographic coordinate order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<u32>, u32)> + '_ {
        self.cells.iter().map(|&(k, v)| (self.unpack(k), v))
    }

    pub fn spectrum(&self) -> Spectrum {
        let domain = if self.arity == 3 {
            Domain::Triples
        } else {
            Domain::Quadruples
        };
        let mut s = Spectrum::new(domain);
        for &(_, v) in &self.cells {
            s.add(v, 1);
        }
        s.add(0, self.total_cells() - self.cells.len() as u128);
        s
    }

    /// One line per nonzero cell: coordinates then count.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(if self.arity == 3 {
            "a,c,b,count\n"
        } else {
            "a,c,b,d,count\n"
        });
        for (coords, v) in self.iter() {
            for c in coords {
                let _ = write!(out, "{c},");
            }
            let _ = writeln!(out, "{v}");
        }
        out
    }
}

/// `{"n": .., "arity": .., "cells": [[a, c, b, (d), count], ..]}`.
impl Serialize for SparseTable {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        struct Cells<'a>(&'a SparseTable);
        impl Serialize for Cells<'_> {
            fn serialize<S: Serializer>(
                &self,
                serializer: S,
            ) -> std::result::Result<S::Ok, S::Error> {
                let mut seq = serializer.serialize_seq(Some(self.0.cells.len()))?;
                for (mut coords, v) in self.0.iter() {
                    coords.push(v);
                    seq.serialize_element(&coords)?;
                }
                seq.end()
            }
        }
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("SparseTable", 3)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("arity", &self.arity)?;
        st.serialize_field("cells", &Cells(self))?;
        st.end()
    }
}

/// Spectrum plus uniformity from one enumeration pass.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PassSummary {
    pub spectrum: Spectrum,
    pub uniformity: u32,
}

/// Per-worker buffers for the class enumeration.
struct Scratch {
    diff: Vec<u32>,
    start: Vec<u32>,
    members: Vec<u32>,
    tally: Vec<u32>,
    touched: Vec<u32>,
    keys: Vec<u64>,
}

impl Scratch {
    fn new(q: usize) -> Self {
        Scratch {
            diff: vec![0; q],
            start: vec![0; q + 1],
            members: vec![0; q],
            tally: vec![0; q],
            touched: Vec::new(),
            keys: Vec::new(),
        }
    }

    /// Buckets `x` by `D_a(x)` (counting sort). Afterwards the class of
    /// output difference `c` is `members[start[c]..start[c+1]]`.
    fn partition(&mut self, lut: &[u32], a: u32) {
        let q = lut.len();
        self.start.iter_mut().for_each(|s| *s = 0);
        for x in 0..q {
            let c = lut[x] ^ lut[x ^ a as usize];
            self.diff[x] = c;
            self.start[c as usize + 1] += 1;
        }
        for c in 0..q {
            self.start[c + 1] += self.start[c];
        }
        // `tally` doubles as the fill cursor here; it is zero again on exit.
        for x in 0..q {
            let c = self.diff[x] as usize;
            let pos = self.start[c] + self.tally[c];
            self.members[pos as usize] = x as u32;
            self.tally[c] += 1;
        }
        for c in 0..q {
            self.tally[c] = 0;
        }
    }

    fn class(&self, c: usize) -> (usize, usize) {
        (self.start[c] as usize, self.start[c + 1] as usize)
    }
}

fn par_rows<T, F>(q: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Scratch, u32) -> T + Sync + Send,
{
    (0..q as u32)
        .into_par_iter()
        .map_init(|| Scratch::new(q), |scratch, a| f(scratch, a))
        .collect()
}

pub fn ddt(s: &SBox) -> Table2D {
    let lut = s.lut();
    let q = lut.len();
    let rows = (0..q)
        .into_par_iter()
        .map(|a| {
            let mut row = vec![0u32; q];
            for x in 0..q {
                row[(lut[x] ^ lut[x ^ a]) as usize] += 1;
            }
            row
        })
        .collect();
    Table2D::from_rows(s.n(), rows)
}

/// `max DDT(a, b)` over `a != 0`.
pub fn differential_uniformity(s: &SBox) -> u32 {
    ddt(s).max_where(|a, _| a != 0)
}

/// DDT spectrum over every `(a, b)`.
pub fn ddt_spectrum(s: &SBox) -> Spectrum {
    ddt(s).spectrum(Domain::Pairs)
}

/// The differential spectrum: DDT values over `a != 0`.
pub fn differential_spectrum(s: &SBox) -> Spectrum {
    ddt(s).spectrum(Domain::NonzeroInputPairs)
}

/// BCT of a permutation.
///
/// With `y = F^-1(F(x)+b)` the defining equation says `y + a` also maps to
/// `F(x+a) + b`, i.e. `D_a(x) = D_a(y)` and `b = F(x) + F(y)`; so row `a`
/// counts `F(x) + F(y)` over ordered pairs inside each `D_a` class.
pub fn bct(s: &SBox) -> Result<Table2D> {
    if !s.is_permutation() {
        return Err(Error::NotPermutation);
    }
    let lut = s.lut();
    let q = lut.len();
    let rows = par_rows(q, |scr, a| {
        scr.partition(lut, a);
        let mut row = vec![0u32; q];
        for c in 0..q {
            let (lo, hi) = scr.class(c);
            let class = &scr.members[lo..hi];
            for &x in class {
                let fx = lut[x as usize];
                for &y in class {
                    row[(fx ^ lut[y as usize]) as usize] += 1;
                }
            }
        }
        row
    });
    Ok(Table2D::from_rows(s.n(), rows))
}

/// `max BCT(a, b)` over `ab != 0`.
pub fn boomerang_uniformity(s: &SBox) -> Result<u32> {
    Ok(bct(s)?.max_where(|a, b| a != 0 && b != 0))
}

pub fn fbct(s: &SBox) -> Table2D {
    let lut = s.lut();
    let q = lut.len();
    let rows = par_rows(q, |scr, a| {
        scr.partition(lut, a);
        let mut row = vec![0u32; q];
        for c in 0..q {
            let (lo, hi) = scr.class(c);
            let class = &scr.members[lo..hi];
            for &x in class {
                for &y in class {
                    row[(x ^ y) as usize] += 1;
                }
            }
        }
        row
    });
    Table2D::from_rows(s.n(), rows)
}

/// `max FBCT(a, b)` over `ab(a+b) != 0`.
pub fn feistel_boomerang_uniformity(s: &SBox) -> u32 {
    fbct(s).max_where(|a, b| a != 0 && b != 0 && a != b)
}

/// `FBDT(a, c, b)` by direct count over `x`.
pub fn fbdt_entry(s: &SBox, a: u32, c: u32, b: u32) -> u32 {
    let f = s.lut();
    let (a, b) = (a as usize, b as usize);
    (0..f.len())
        .filter(|&x| {
            let dx = f[x] ^ f[x ^ a];
            dx == c && dx == f[x ^ b] ^ f[x ^ a ^ b]
        })
        .count() as u32
}

/// `FBET(a, c, b, d)` by direct count over `x`.
pub fn fbet_entry(s: &SBox, a: u32, c: u32, b: u32, d: u32) -> u32 {
    let f = s.lut();
    let (a, b) = (a as usize, b as usize);
    (0..f.len())
        .filter(|&x| {
            let dx = f[x] ^ f[x ^ a];
            dx == c && dx == f[x ^ b] ^ f[x ^ a ^ b] && f[x ^ a] ^ f[x ^ a ^ b] == d
        })
        .count() as u32
}

/// Any single cell by direct count over `x`. Coordinates must lie in the field.
pub fn entry(s: &SBox, kind: TableKind, coords: &[u32]) -> Result<u32> {
    if coords.len() != kind.arity() {
        return Err(Error::Arity {
            expected: kind.arity(),
            got: coords.len(),
        });
    }
    if let Some(&c) = coords.iter().find(|&&c| c as usize >= s.size()) {
        return Err(Error::ElementRange {
            value: c as u64,
            n: s.n(),
        });
    }
    let f = s.lut();
    let (a, b) = (coords[0] as usize, coords[coords.len() - 1] as usize);
    let count = |keep: &dyn Fn(usize) -> bool| (0..f.len()).filter(|&x| keep(x)).count() as u32;
    Ok(match kind {
        TableKind::Ddt => count(&|x| f[x] ^ f[x ^ a] == b as u32),
        TableKind::Fbct => count(&|x| f[x] ^ f[x ^ a] == f[x ^ b] ^ f[x ^ a ^ b]),
        TableKind::Bct => {
            let inv = s.inverse()?;
            let g = inv.lut();
            count(&|x| {
                g[(f[x] ^ b as u32) as usize] ^ g[(f[x ^ a] ^ b as u32) as usize] == a as u32
            })
        }
        TableKind::Fbdt => fbdt_entry(s, coords[0], coords[1], coords[2]),
        TableKind::Fbet => fbet_entry(s, coords[0], coords[1], coords[2], coords[3]),
    })
}

/// Visits every nonzero FBDT cell `(a, c, b)` of row `a` as `(c, b, count)`.
fn fbdt_row_cells(lut: &[u32], a: u32, scr: &mut Scratch, mut emit: impl FnMut(u32, u32, u32)) {
    let q = lut.len();
    scr.partition(lut, a);
    for c in 0..q {
        let (lo, hi) = scr.class(c);
        if lo == hi {
            continue;
        }
        for i in lo..hi {
            let x = scr.members[i];
            for j in lo..hi {
                let b = x ^ scr.members[j];
                if scr.tally[b as usize] == 0 {
                    scr.touched.push(b);
                }
                scr.tally[b as usize] += 1;
            }
        }
        scr.touched.sort_unstable();
        for &b in &scr.touched {
            emit(c as u32, b, scr.tally[b as usize]);
            scr.tally[b as usize] = 0;
        }
        scr.touched.clear();
    }
}

/// Visits every nonzero FBET cell `(a, c, b, d)` of row `a` as `(c, b, d, count)`.
fn fbet_row_cells(
    lut: &[u32],
    n: u32,
    a: u32,
    scr: &mut Scratch,
    mut emit: impl FnMut(u32, u32, u32, u32),
) {
    let q = lut.len();
    let mask = (1u64 << n) - 1;
    scr.partition(lut, a);
    for c in 0..q {
        let (lo, hi) = scr.class(c);
        if lo == hi {
            continue;
        }
        scr.keys.clear();
        for i in lo..hi {
            let x = scr.members[i];
            let fxa = lut[(x ^ a) as usize];
            for j in lo..hi {
                let y = scr.members[j];
                let d = fxa ^ lut[(y ^ a) as usize];
                scr.keys.push(((x ^ y) as u64) << n | d as u64);
            }
        }
        scr.keys.sort_unstable();
        let mut i = 0;
        while i < scr.keys.len() {
            let key = scr.keys[i];
            let mut j = i + 1;
            while j < scr.keys.len() && scr.keys[j] == key {
                j += 1;
            }
            emit(
                c as u32,
                (key >> n) as u32,
                (key & mask) as u32,
                (j - i) as u32,
            );
            i = j;
        }
    }
}

/// Histogram of nonzero cells of one row, plus the max over non-trivial cells.
fn row_summary(spectrum: &mut Spectrum, best: &mut u32, value: u32, trivial: bool) {
    spectrum.add(value, 1);
    if !trivial {
        *best = (*best).max(value);
    }
}

fn merge_rows(domain: Domain, n: u32, rows: Vec<(Spectrum, u32)>) -> PassSummary {
    let mut spectrum = Spectrum::new(domain);
    let mut uniformity = 0;
    for (s, u) in &rows {
        spectrum.merge(s);
        uniformity = uniformity.max(*u);
    }
    let zeros = domain.size(n) - spectrum.total();
    spectrum.add(0, zeros);
    PassSummary {
        spectrum,
        uniformity,
    }
}

/// FBDT spectrum and `β_d = max FBDT(a, c, b)` over `(a, c) != (0, 0)`,
/// without materializing the table.
pub fn fbdt_summary(s: &SBox) -> PassSummary {
    let lut = s.lut();
    let rows = par_rows(lut.len(), |scr, a| {
        let mut spectrum = Spectrum::new(Domain::Triples);
        let mut best = 0;
        fbdt_row_cells(lut, a, scr, |c, _, v| {
            row_summary(&mut spectrum, &mut best, v, a == 0 && c == 0)
        });
        (spectrum, best)
    });
    merge_rows(Domain::Triples, s.n(), rows)
}

pub fn fbdt_spectrum(s: &SBox) -> Spectrum {
    fbdt_summary(s).spectrum
}

pub fn feistel_boomerang_differential_uniformity(s: &SBox) -> u32 {
    fbdt_summary(s).uniformity
}

/// FBET spectrum and `β_e = max FBET` over all tuples except `(0,0,0,0)`.
pub fn fbet_summary(s: &SBox) -> PassSummary {
    let lut = s.lut();
    let n = s.n();
    let rows = par_rows(lut.len(), |scr, a| {
        let mut spectrum = Spectrum::new(Domain::Quadruples);
        let mut best = 0;
        fbet_row_cells(lut, n, a, scr, |c, b, d, v| {
            row_summary(
                &mut spectrum,
                &mut best,
                v,
                a == 0 && c == 0 && b == 0 && d == 0,
            )
        });
        (spectrum, best)
    });
    merge_rows(Domain::Quadruples, n, rows)
}

pub fn fbet_spectrum(s: &SBox) -> Spectrum {
    fbet_summary(s).spectrum
}

pub fn feistel_boomerang_extended_uniformity(s: &SBox) -> u32 {
    fbet_summary(s).uniformity
}

/// All nonzero FBDT cells.
pub fn fbdt_table(s: &SBox) -> SparseTable {
    let lut = s.lut();
    let n = s.n();
    let rows: Vec<Vec<(u64, u32)>> = par_rows(lut.len(), |scr, a| {
        let mut cells = Vec::new();
        fbdt_row_cells(lut, a, scr, |c, b, v| {
            cells.push((SparseTable::pack(n, &[a, c, b]), v))
        });
        cells
    });
    SparseTable {
        n,
        arity: 3,
        cells: rows.into_iter().flatten().collect(),
    }
}

/// All nonzero FBET cells.
pub fn fbet_table(s: &SBox) -> SparseTable {
    let lut = s.lut();
    let n = s.n();
    let rows: Vec<Vec<(u64, u32)>> = par_rows(lut.len(), |scr, a| {
        let mut cells = Vec::new();
        fbet_row_cells(lut, n, a, scr, |c, b, d, v| {
            cells.push((SparseTable::pack(n, &[a, c, b, d]), v))
        });
        cells
    });
    SparseTable {
        n,
        arity: 4,
        cells: rows.into_iter().flatten().collect(),
    }
}
