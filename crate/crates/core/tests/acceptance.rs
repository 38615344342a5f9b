use std::io::Write;
use std::process::Command;
use std::sync::Mutex;
use std::time::Instant;

use bessel_credit::battery::{criterion, BatteryConfig, Check, Criterion};

const SEED: u64 = 20240601;

// budgets are wall-clock, so criteria must not share the machine
static SERIAL: Mutex<()> = Mutex::new(());

// written to the stderr handle directly so that the lines survive the
// test harness's output capture
fn say(line: &str) {
    let _ = writeln!(std::io::stderr(), "{line}");
}

fn show(c: &Criterion) {
    say(&c.status_line());
    for k in c.failures() {
        let tag = if k.known_gap { "documented gap" } else { "failure" };
        say(&format!(
            "    {tag}: {}: value {:.16e} reference {:.16e} bound {:.16e}{}",
            k.name,
            k.value,
            k.reference,
            k.bound,
            k.reason.as_deref().map(|r| format!(" ({r})")).unwrap_or_default()
        ));
    }
}

fn accept(id: u8) -> Criterion {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let c = criterion(id, &BatteryConfig::full(SEED)).unwrap();
    show(&c);
    assert!(c.in_budget(), "criterion {id} over budget: {:.1} s", c.elapsed);
    c
}

#[test]
fn criterion_1_special_functions() {
    assert!(accept(1).passed());
}

#[test]
fn criterion_2_transform_inversion() {
    assert!(accept(2).passed());
}

#[test]
fn criterion_3_stopped_cev() {
    assert!(accept(3).passed());
}

#[test]
fn criterion_4_first_passage_and_eds() {
    // the vanishing-trigger clause fails for the model itself; it is reported
    // as FAIL above and every other clause must hold
    assert!(accept(4).passed_except_gaps());
}

#[test]
fn criterion_5_time_change_laws() {
    assert!(accept(5).passed());
}

#[test]
fn criterion_6_time_changed_pricing() {
    assert!(accept(6).passed());
}

#[test]
fn criterion_7_loss_of_martingality() {
    assert!(accept(7).passed());
}

fn selftest(seed: u64) -> (Vec<u8>, f64) {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_bessel-credit"))
        .args(["selftest", "--seed", &seed.to_string()])
        .output()
        .expect("run selftest");
    (out.stdout, start.elapsed().as_secs_f64())
}

#[test]
fn criterion_8_reproducibility() {
    let guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut c = criterion(8, &BatteryConfig::full(SEED)).unwrap();
    let (a, ta) = selftest(7);
    let (b, tb) = selftest(7);
    drop(guard);
    let same = !a.is_empty() && a == b;
    say(&format!(
        "    selftest twice with seed 7: {} ({} bytes, {:.1} s and {:.1} s on {} threads)",
        if same { "byte-identical" } else { "DIFFERENT" },
        a.len(),
        ta,
        tb,
        std::thread::available_parallelism().map_or(1, |n| n.get())
    ));
    c.checks.push(Check::holds("selftest reports byte-identical", same));
    c.checks.push(Check::below("selftest runtime in seconds", ta.max(tb), 600.0));
    show(&c);
    assert!(c.in_budget(), "criterion 8 over budget: {:.1} s", c.elapsed);
    assert!(c.passed());
}
