//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

use std::process::ExitCode;
use std::time::Instant;

use fbtables::tables::{self, with_workers};
use fbtables::{ClosedForm, Domain, Elem, FieldSpec, SBox, Spectrum, TableKind, Verifier};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Failures = Vec<String>;
type Criterion = (&'static str, fn() -> Failures);

fn field(n: u32) -> FieldSpec {
    FieldSpec::new(n).unwrap()
}

fn spectrum(domain: Domain, entries: &[(u32, u128)]) -> Spectrum {
    Spectrum::from_entries(domain, entries.iter().copied())
}

fn expect<T: PartialEq + std::fmt::Debug>(fails: &mut Failures, what: &str, want: T, got: T) {
    if want != got {
        fails.push(format!("{what}: expected {want:?}, got {got:?}"));
    }
}

fn entrywise(fails: &mut Failures, v: &Verifier, n: u32, table: TableKind) {
    let r = v.entrywise(&field(n), table).unwrap();
    if !r.passed {
        fails.push(format!("{table} n={n}: {} mismatches", r.mismatch_count));
    }
}

fn even_or(n: u32, odd: u32) -> u32 {
    if n.is_multiple_of(2) {
        1 << (n / 2)
    } else {
        odd
    }
}

fn ddt_oracle() -> Failures {
    let mut fails = Vec::new();
    for n in 3..=10 {
        entrywise(&mut fails, &Verifier::default(), n, TableKind::Ddt);
    }
    fails
}

fn ddt_spectra() -> Failures {
    let mut fails = Vec::new();
    // published counts omit the (0,0) cell
    for (n, want) in [
        (3, vec![(2, 28), (0, 35)]),
        (4, vec![(4, 15), (2, 90), (0, 150)]),
    ] {
        let s = SBox::closed_form_map(&field(n));
        let mut got = tables::ddt_spectrum(&s);
        let mut want = spectrum(Domain::Pairs, &want);
        want.add(1 << n, 1);
        expect(
            &mut fails,
            &format!("ddt spectrum n={n}"),
            want.clone(),
            got.clone(),
        );
        got = ClosedForm::new(&field(n)).ddt_spectrum();
        expect(
            &mut fails,
            &format!("closed-form ddt spectrum n={n}"),
            want,
            got,
        );
    }
    for n in 3..=10 {
        let s = SBox::closed_form_map(&field(n));
        expect(
            &mut fails,
            &format!("delta n={n}"),
            even_or(n, 2),
            tables::differential_uniformity(&s),
        );
    }
    fails
}

fn fbct_oracle_and_spectra() -> Failures {
    let mut fails = Vec::new();
    for n in 3..=10 {
        entrywise(&mut fails, &Verifier::default(), n, TableKind::Fbct);
        let s = SBox::closed_form_map(&field(n));
        expect(
            &mut fails,
            &format!("beta_c n={n}"),
            even_or(n, 0),
            tables::feistel_boomerang_uniformity(&s),
        );
    }
    let s = SBox::closed_form_map(&field(4));
    expect(
        &mut fails,
        "fbct spectrum n=4",
        spectrum(Domain::Pairs, &[(16, 46), (4, 30), (0, 180)]),
        tables::fbct(&s).spectrum(Domain::Pairs),
    );
    fails
}

fn fbdt() -> Failures {
    let mut fails = Vec::new();
    let v = Verifier {
        force_exhaustive: true,
        ..Verifier::default()
    };
    for n in 3..=6 {
        entrywise(&mut fails, &v, n, TableKind::Fbdt);
        let s = SBox::closed_form_map(&field(n));
        expect(
            &mut fails,
            &format!("beta_d n={n}"),
            even_or(n, 2),
            tables::feistel_boomerang_differential_uniformity(&s),
        );
    }
    for (n, want) in [
        (3, vec![(8, 8), (2, 56), (0, 448)]),
        (4, vec![(16, 16), (4, 60), (2, 180), (0, 3840)]),
    ] {
        let s = SBox::closed_form_map(&field(n));
        expect(
            &mut fails,
            &format!("fbdt spectrum n={n}"),
            spectrum(Domain::Triples, &want),
            tables::fbdt_spectrum(&s),
        );
    }
    fails
}

fn fbet() -> Failures {
    let mut fails = Vec::new();
    let v = Verifier::default();
    for n in 3..=5 {
        entrywise(&mut fails, &v, n, TableKind::Fbet);
        let s = SBox::closed_form_map(&field(n));
        expect(
            &mut fails,
            &format!("beta_e n={n}"),
            even_or(n, 2),
            tables::feistel_boomerang_extended_uniformity(&s),
        );
    }
    for (n, want) in [
        (3, vec![(8, 1), (2, 84), (0, 4011)]),
        (4, vec![(16, 1), (4, 75), (2, 180), (0, 65280)]),
    ] {
        let s = SBox::closed_form_map(&field(n));
        expect(
            &mut fails,
            &format!("fbet spectrum n={n}"),
            spectrum(Domain::Quadruples, &want),
            tables::fbet_spectrum(&s),
        );
    }
    fails
}

fn structural() -> Failures {
    let mut fails = Vec::new();
    let v = Verifier::default();
    let mut check = |s: &SBox, what: String| {
        let r = v.structural(s);
        if !r.passed {
            fails.push(format!("{what}: {}", r.to_text().trim_end()));
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for n in [4, 6] {
        let f = field(n);
        for i in 0..100 {
            let lut: Vec<u64> = (0..f.order())
                .map(|_| rng.gen_range(0..f.order() as u64))
                .collect();
            check(
                &SBox::from_lut(&f, &lut).unwrap(),
                format!("random lut #{i} n={n}"),
            );
        }
    }
    for n in 3..=8 {
        let f = field(n);
        for d in 1..(1u64 << n) {
            check(&SBox::power(&f, d).unwrap(), format!("x^{d} n={n}"));
        }
    }
    fails
}

fn regression() -> Failures {
    let mut fails = Vec::new();
    for n in 4..=7 {
        let s = SBox::power(&field(n), 3).unwrap();
        expect(
            &mut fails,
            &format!("x^3 beta_c n={n}"),
            0,
            tables::feistel_boomerang_uniformity(&s),
        );
    }
    for n in 4..=8 {
        let s = SBox::inversion(&field(n));
        let odd = n % 2 == 1;
        expect(
            &mut fails,
            &format!("inverse delta n={n}"),
            if odd { 2 } else { 4 },
            tables::differential_uniformity(&s),
        );
        expect(
            &mut fails,
            &format!("inverse beta_c n={n}"),
            if odd { 0 } else { 4 },
            tables::feistel_boomerang_uniformity(&s),
        );
    }
    fails
}

fn quadratic_solver() -> Failures {
    let mut fails = Vec::new();
    for n in 3..=6 {
        let f = field(n);
        for a in f.elements().skip(1) {
            for b in f.elements() {
                for c in f.elements() {
                    let roots = f.solve_quadratic(a, b, c).unwrap();
                    let brute: Vec<Elem> = f
                        .elements()
                        .filter(|&x| {
                            f.add(f.add(f.mul(a, f.square(x)), f.mul(b, x)), c)
                                .is_zero()
                        })
                        .collect();
                    let count = if b.is_zero() {
                        1
                    } else if f.trace(f.div(f.mul(a, c), f.square(b)).unwrap()) == 0 {
                        2
                    } else {
                        0
                    };
                    if roots != brute || roots.len() != count {
                        fails.push(format!(
                            "n={n} a={:#x} b={:#x} c={:#x}: got {roots:?}, brute {brute:?}, expected {count} roots",
                            a.0, b.0, c.0
                        ));
                    }
                }
            }
        }
    }
    fails
}

fn determinism() -> Failures {
    let mut fails = Vec::new();
    let s = SBox::closed_form_map(&field(6));
    let runs: Vec<(usize, String)> = [1, 4, 8]
        .into_iter()
        .map(|w| (w, with_workers(w, || tables::fbdt_spectrum(&s).to_json())))
        .collect();
    for (w, json) in &runs[1..] {
        if *json != runs[0].1 {
            fails.push(format!(
                "workers={w}: {json} differs from workers=1: {}",
                runs[0].1
            ));
        }
    }
    fails
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("DDT closed form matches brute force, n=3..10", ddt_oracle),
        ("DDT spectra and differential uniformity", ddt_spectra),
        (
            "FBCT closed form, spectrum and beta_c",
            fbct_oracle_and_spectra,
        ),
        ("FBDT exhaustive sweep, spectra and beta_d", fbdt),
        ("FBET entries, spectra and beta_e", fbet),
        (
            "structural properties of random and power S-boxes",
            structural,
        ),
        ("Gold and inverse map regression values", regression),
        (
            "quadratic solver against exhaustive roots",
            quadratic_solver,
        ),
        (
            "FBDT spectrum JSON identical for 1, 4 and 8 workers",
            determinism,
        ),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let fails = run();
        let secs = start.elapsed().as_secs_f64();
        let status = if fails.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {}: {status} {name} ({secs:.2}s)", i + 1);
        for f in &fails {
            println!("    {f}");
        }
        if !fails.is_empty() {
            failed += 1;
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
