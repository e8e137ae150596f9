//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line.
//!
//! A criterion listed in `UNATTAINABLE` is expected to fail for a reason that
//! is understood; the test fails if such a criterion starts passing, or if
//! any other criterion fails.

use std::f64::consts::PI;

use gatecheck::dynamics::{bloch_trajectory, propagate, ErrorKind, ErrorModel};
use gatecheck::hilbert::BlockadedBasis;
use gatecheck::metrics::{cross_susceptibility, susceptibilities, Evaluator, Metric};
use gatecheck::optimize::{polish, s3_objective, search_s3};
use gatecheck::protocols::{ccz_sequence, ideal_model, protocol_i, ProtocolId, S3Params, Sequence, Variant};
use gatecheck::tables::{compute_table, protocol_i_closed_forms, TableRow};

/// 4: `1 - P(0.1)` for II.b is `4e-6`, the sixth-order coefficient being 4.
/// 11: polishing the printed parameters lands on a zero with duration 22.918.
const UNATTAINABLE: [usize; 2] = [4, 11];

type Outcome = (bool, String);

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn variants() -> [Variant; 2] {
    [Variant::One, Variant::Two]
}

fn infidelity(seq: &Sequence) -> f64 {
    1.0 - Evaluator::new(seq).unwrap().report(&ideal_model()).unwrap().f
}

/// Every catalog sequence once, both variants where applicable, at `phi = pi`.
fn catalog() -> Vec<Sequence> {
    let mut out = Vec::new();
    for id in ProtocolId::ALL {
        if id.has_variants() {
            for v in variants() {
                out.push(id.build(v, PI).unwrap());
            }
        } else {
            out.push(id.build(Variant::One, PI).unwrap());
        }
    }
    out
}

fn find<'a>(rows: &'a [TableRow], protocol: &str, variant: u8, metric: &str) -> &'a TableRow {
    rows.iter()
        .find(|r| r.protocol == protocol && r.variant == variant && r.metric == metric)
        .unwrap_or_else(|| panic!("no row {protocol} v{variant} {metric}"))
}

/// Checks `(order, coefficient)` of a row against an expected pair.
fn spot(rows: &[TableRow], protocol: &str, variant: u8, metric: &str, order: usize, value: f64, tol: f64, notes: &mut Vec<String>) -> bool {
    let r = find(rows, protocol, variant, metric);
    let ok = r.order == order && rel(r.coefficient, value) <= tol;
    if !ok {
        notes.push(format!("{protocol} v{variant} {metric}: order {} coeff {:.4} vs {order}/{value}", r.order, r.coefficient));
    }
    ok
}

fn summary(ok: bool, worst: String, notes: Vec<String>) -> Outcome {
    if notes.is_empty() {
        (ok, worst)
    } else {
        (ok, format!("{worst}; {}", notes.join("; ")))
    }
}

fn c1_gate_exactness() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    for v in variants() {
        for phi in [PI / 2.0, PI] {
            worst = worst.max(infidelity(&protocol_i(v, phi).unwrap()));
        }
    }
    for seq in catalog() {
        let e = infidelity(&seq);
        if e >= 1e-9 {
            notes.push(format!("{} 1-F={e:.2e}", seq.label()));
        }
        worst = worst.max(e);
    }
    let printed = infidelity(&ccz_sequence(&S3Params::PRINTED, 0.0));
    let ok = worst < 1e-9 && printed < 1e-4 && notes.is_empty();
    summary(ok, format!("max 1-F {worst:.2e}, printed CCZ 1-F {printed:.2e}"), notes)
}

fn c2_table_one() -> Outcome {
    let rows = compute_table(1).unwrap();
    let mut notes = Vec::new();
    let mut ok = true;
    let expected = [
        ("Jaksch", [(2, 4.935), (2, 4.935), (4, 4.870)], 12.57, 0.01),
        ("Levine", [(2, 2.963), (2, 2.547), (2, 0.416)], 8.59, 0.03),
        ("I", [(2, 1.878), (2, 1.878), (4, 0.329)], 10.73, 0.01),
        ("II", [(4, 0.329), (6, 1.944), (4, 0.329)], 21.45, 0.01),
    ];
    let mut worst: f64 = 0.0;
    for (name, entries, duration, tol) in expected {
        for ((order, value), metric) in entries.into_iter().zip(["F", "P", "C"]) {
            ok &= spot(&rows, name, 1, metric, order, value, tol, &mut notes);
            worst = worst.max(rel(find(&rows, name, 1, metric).coefficient, value));
        }
        let t = find(&rows, name, 1, "F").duration;
        if (t - duration).abs() > 0.01 {
            ok = false;
            notes.push(format!("{name} duration {t:.4}"));
        }
    }
    summary(ok, format!("worst relative deviation {:.3}%", 100.0 * worst), notes)
}

fn c3_closed_forms() -> Outcome {
    let rows = compute_table(1).unwrap();
    let (f2, c4) = protocol_i_closed_forms();
    let fit_f = find(&rows, "I", 1, "F").coefficient;
    let fit_c = find(&rows, "I", 1, "C").coefficient;
    let (a, b) = (rel(fit_f, f2), rel(fit_c, c4));
    (a <= 5e-3 && b <= 5e-3, format!("c2(F) {fit_f:.5} vs {f2:.5}, c4(C) {fit_c:.5} vs {c4:.5}"))
}

fn c4_table_two() -> Outcome {
    let rows = compute_table(2).unwrap();
    let mut notes = Vec::new();
    let mut ok = true;
    for (p, v, m, k, c) in [
        ("Jaksch", 1, "F", 2, 2.480),
        ("Jaksch", 1, "P", 2, 1.0),
        ("Jaksch", 1, "C", 2, 1.480),
        ("I", 1, "F", 2, 4.314),
        ("I", 1, "P", 4, 3.124),
        ("II.a", 1, "F", 4, 7.035),
        ("II.a", 1, "P", 4, 6.249),
        ("II.a", 1, "C", 4, 0.786),
        ("II.b", 1, "F", 4, 0.786),
        ("III", 1, "F", 4, 1.570),
    ] {
        ok &= spot(&rows, p, v, m, k, c, 0.01, &mut notes);
    }
    let iib = ProtocolId::IIb.build(Variant::One, PI).unwrap();
    let deficit = 1.0 - Evaluator::new(&iib).unwrap().metric(ErrorKind::SymDetuning, Metric::P, 0.1).unwrap();
    let order = find(&rows, "II.b", 1, "P").order;
    if deficit >= 1e-6 || order < 6 {
        ok = false;
        notes.push(format!("II.b v1 1-P(0.1) {deficit:.3e} (order {order})"));
    }
    summary(ok, "spot rows".into(), notes)
}

fn c5_table_three() -> Outcome {
    let rows = compute_table(3).unwrap();
    let mut notes = Vec::new();
    let mut ok = true;
    for (p, v, m, k, c, tol) in [
        ("I", 1, "F", 2, 17.637, 0.01),
        ("I", 1, "P", 2, 6.132, 0.01),
        ("I", 1, "C", 2, 11.505, 0.01),
        ("I.a", 1, "C", 4, 0.8, 0.01),
        ("II.a", 1, "C", 4, 171.462, 0.01),
        ("II.b", 1, "F", 4, 0.8, 0.01),
        ("III", 1, "F", 4, 676.0, 0.02),
        ("III", 1, "P", 4, 513.0, 0.02),
        ("III", 1, "C", 4, 163.0, 0.02),
    ] {
        ok &= spot(&rows, p, v, m, k, c, tol, &mut notes);
    }
    let iii: Vec<String> = ["F", "P", "C"].iter().map(|m| format!("{:.2}", find(&rows, "III", 1, m).coefficient)).collect();
    summary(ok, format!("III v1 ({})", iii.join(", ")), notes)
}

fn c6_zero_susceptibilities() -> Outcome {
    use ErrorKind::{AntisymDetuning as Anti, Intensity as Int, SymDetuning as Sym};
    let all = [Metric::F, Metric::P, Metric::C];
    let checks: Vec<(ProtocolId, ErrorKind, Vec<Metric>)> = vec![
        (ProtocolId::I, Int, vec![Metric::C]),
        (ProtocolId::II, Int, all.to_vec()),
        (ProtocolId::I, Sym, vec![Metric::P]),
        (ProtocolId::IIa, Sym, all.to_vec()),
        (ProtocolId::III, Sym, all.to_vec()),
        (ProtocolId::III, Anti, all.to_vec()),
        (ProtocolId::Ia, Sym, vec![Metric::C]),
        (ProtocolId::Ia, Anti, vec![Metric::C]),
    ];
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    for (id, kind, metrics) in checks {
        for v in variants() {
            let seq = id.build(v, PI).unwrap();
            let chi = susceptibilities(&seq, kind).unwrap();
            for &m in &metrics {
                let x = chi.of(m).abs();
                worst = worst.max(x);
                if x >= 1e-6 {
                    notes.push(format!("{} {kind} {m} {x:.2e}", seq.label()));
                }
            }
        }
    }
    summary(notes.is_empty(), format!("max |chi| {worst:.2e}"), notes)
}

fn c7_structural() -> Outcome {
    let basis = BlockadedBasis::new(2).unwrap();
    let du = |id: ProtocolId, kind: ErrorKind| {
        let seq = id.build(Variant::One, PI).unwrap();
        propagate(&seq, &ErrorModel::new(kind, 0.0), true).unwrap().du.unwrap()
    };
    let p = basis.qubit_projector().0;
    let q = basis.rydberg_projector().0;
    let leak = (&q * du(ProtocolId::II, ErrorKind::Intensity) * &p).norm();

    let d3 = du(ProtocolId::III, ErrorKind::AntisymDetuning);
    let a = basis.named_state("A").unwrap();
    let i11 = basis.config_index("11").unwrap();
    let anti = a.0.dotc(&d3.column(i11)).norm();

    let d1 = du(ProtocolId::I, ErrorKind::Intensity);
    let diag = basis.qubit_indices().iter().map(|&i| d1[(i, i)].norm()).fold(0.0, f64::max);
    let ok = leak < 1e-8 && anti < 1e-8 && diag < 1e-8;
    (ok, format!("|Q dU P| {leak:.2e}, |<A|dU|11>| {anti:.2e}, max |<z|dU|z>| {diag:.2e}"))
}

/// (protocol, model) pairs whose expansions carry odd orders. Intensity
/// errors are not symmetric under `eps -> -eps` (the pulse area scales by
/// `1 + eps`), and symmetric detuning is odd on the sequences without a
/// Doppler echo whose S blocks do not cancel it.
const ODD_PAIRS: [(&str, ErrorKind); 11] = [
    ("Levine", ErrorKind::Intensity),
    ("Levine", ErrorKind::SymDetuning),
    ("I", ErrorKind::Intensity),
    ("II", ErrorKind::Intensity),
    ("II", ErrorKind::SymDetuning),
    ("II.a", ErrorKind::Intensity),
    ("I.a", ErrorKind::Intensity),
    ("II.b", ErrorKind::Intensity),
    ("III", ErrorKind::Intensity),
    ("CCZ", ErrorKind::Intensity),
    ("CC", ErrorKind::Intensity),
];

/// Sum rule on every pair. Parity is exact for pairs with even expansions;
/// for the pinned odd pairs the asymmetry must equal twice the odd part of
/// the exact series.
fn c8_sum_rule_parity() -> Outcome {
    const ORDER: usize = 7;
    let mut sum_rule: f64 = 0.0;
    let mut parity: f64 = 0.0;
    let mut odd_residual: f64 = 0.0;
    let mut odd_count = 0;
    let mut notes = Vec::new();
    for seq in catalog() {
        let ev = Evaluator::new(&seq).unwrap();
        for kind in ErrorKind::ALL.into_iter().filter(|k| k.supports(seq.n_atoms)) {
            let chi = susceptibilities(&seq, kind).unwrap();
            sum_rule = sum_rule.max((chi.chi - chi.chi_p - chi.chi_c).abs());
            let series = ev.series(kind, ORDER).unwrap();
            let has_odd = Metric::ALL.iter().any(|&m| {
                let c = series.of(m);
                let scale = 1.0 + c.iter().map(|x| x.abs()).fold(0.0, f64::max);
                c.iter().skip(1).step_by(2).any(|x| x.abs() > 1e-9 * scale)
            });
            let pinned = ODD_PAIRS.contains(&(seq.name.as_str(), kind));
            if has_odd != pinned {
                notes.push(format!("{}/{kind}: odd terms {has_odd}, pinned {pinned}", seq.label()));
            }
            for eps in [0.01, 0.05, 0.1] {
                for m in Metric::ALL {
                    let diff = ev.metric(kind, m, eps).unwrap() - ev.metric(kind, m, -eps).unwrap();
                    if has_odd {
                        let odd: f64 = series.of(m).iter().enumerate().skip(1).step_by(2).map(|(k, c)| 2.0 * c * eps.powi(k as i32)).sum();
                        if eps <= 0.01 {
                            odd_residual = odd_residual.max((diff - odd).abs());
                        }
                    } else {
                        parity = parity.max(diff.abs());
                    }
                }
            }
            odd_count += usize::from(has_odd);
        }
    }
    let ok = sum_rule < 1e-6 && parity < 1e-10 && odd_residual < 1e-10 && notes.is_empty();
    summary(
        ok,
        format!(
            "sum rule {sum_rule:.2e}, parity {parity:.2e} on even pairs, {odd_count} odd pairs match their odd series to {odd_residual:.2e}"
        ),
        notes,
    )
}

fn c9_multivariate() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for id in [ProtocolId::I, ProtocolId::IIa, ProtocolId::III] {
        for v in variants() {
            let seq = id.build(v, PI).unwrap();
            let kinds: Vec<ErrorKind> = ErrorKind::ALL.into_iter().filter(|k| k.supports(2)).collect();
            let diag: Vec<f64> = kinds.iter().map(|&k| cross_susceptibility(&seq, k, k).unwrap()).collect();
            for i in 0..kinds.len() {
                for j in i + 1..kinds.len() {
                    let x = cross_susceptibility(&seq, kinds[i], kinds[j]).unwrap();
                    worst = worst.max(x * x - diag[i] * diag[j]);
                }
            }
        }
    }
    (worst <= 1e-8, format!("max (d_ij F)^2 - d_ii F d_jj F = {worst:.3e}"))
}

fn c10_positional() -> Outcome {
    let mut notes = Vec::new();
    let mut flat: f64 = 0.0;
    let mut sensitive = f64::INFINITY;
    for v in variants() {
        for id in [ProtocolId::IIa, ProtocolId::III] {
            let seq = id.build(v, PI).unwrap();
            let e = 1.0 - Evaluator::new(&seq).unwrap().metric(ErrorKind::PositionalPhase, Metric::F, 0.3).unwrap();
            flat = flat.max(e.abs());
            if e.abs() > 1e-10 {
                notes.push(format!("{} 1-F {e:.2e}", seq.label()));
            }
        }
        for id in [ProtocolId::Ia, ProtocolId::IIb] {
            let seq = id.build(v, PI).unwrap();
            let e = 1.0 - Evaluator::new(&seq).unwrap().metric(ErrorKind::PositionalPhase, Metric::C, 0.3).unwrap();
            sensitive = sensitive.min(e);
            if e <= 1e-3 {
                notes.push(format!("{} 1-C {e:.2e}", seq.label()));
            }
        }
    }
    summary(notes.is_empty(), format!("II.a/III max |1-F| {flat:.2e}, I.a/II.b min 1-C {sensitive:.3e}"), notes)
}

fn c11_ccz_search() -> Outcome {
    let printed = S3Params::PRINTED.to_array();
    let pol = polish(&S3Params::PRINTED).unwrap();
    let dev = pol.params.to_array().iter().zip(printed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let duration = pol.params.ccz_duration();
    let mut notes = Vec::new();
    if pol.objective >= 1e-12 {
        notes.push(format!("polish objective {:.2e}", pol.objective));
    }
    if dev > 0.01 {
        notes.push(format!("parameter deviation {dev:.4}"));
    }
    if (duration - 22.84).abs() > 0.02 {
        notes.push(format!("polished duration {duration:.4} vs 22.84"));
    }
    let cold = match search_s3(0) {
        Ok(r) => {
            let check = s3_objective(&r.params).unwrap().value;
            if check >= 1e-10 {
                notes.push(format!("seed 0 objective {check:.2e}"));
            }
            format!("seed 0 objective {check:.1e} duration {:.4} (restart {})", r.duration, r.restart)
        }
        Err(e) => {
            notes.push(format!("seed 0: {e}"));
            "seed 0 failed".into()
        }
    };
    summary(notes.is_empty(), format!("polish objective {:.1e}, max deviation {dev:.4}; {cold}", pol.objective), notes)
}

fn c12_trajectories() -> Outcome {
    let mut notes = Vec::new();
    let mut report = Vec::new();
    for (phi, states) in [(PI, ["01", "11"]), (PI / 2.0, ["01", "11"])] {
        let seq = protocol_i(Variant::One, phi).unwrap();
        for s in states {
            let t = bloch_trajectory(&seq, s, 100).unwrap();
            let z = t.samples.last().unwrap().z;
            let phase = t.accumulated_phase();
            // compare on the circle so that pi and -pi agree
            let err = (phase - phi + PI).rem_euclid(2.0 * PI) - PI;
            if (z + 1.0).abs() > 1e-9 || err.abs() > 1e-6 {
                notes.push(format!("phi {phi:.4} from {s}: z {z:.3e} phase {phase:.9}"));
            }
            report.push(format!("{s}@{:.4}: {:.9}", phi, phase));
        }
    }
    summary(notes.is_empty(), report.join(", "), notes)
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("gate exactness", c1_gate_exactness),
        ("table 1 reproduction", c2_table_one),
        ("closed-form cross-check", c3_closed_forms),
        ("table 2 spot rows", c4_table_two),
        ("table 3 spot rows", c5_table_three),
        ("zero susceptibilities", c6_zero_susceptibilities),
        ("structural robustness", c7_structural),
        ("sum rule and parity", c8_sum_rule_parity),
        ("multivariate inequality", c9_multivariate),
        ("positional phase shift", c10_positional),
        ("CCZ polish and search", c11_ccz_search),
        ("trajectory export", c12_trajectories),
    ];
    let mut unexpected = Vec::new();
    for (k, (name, check)) in criteria.iter().enumerate() {
        let id = k + 1;
        let (ok, detail) = check();
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {tag} {name}: {detail}");
        if ok == UNATTAINABLE.contains(&id) {
            unexpected.push(id);
        }
    }
    assert!(unexpected.is_empty(), "criteria with unexpected outcome: {unexpected:?}");
}
