//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! test harness so the lines always reach the output; exits non-zero if
//! any criterion fails.

use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smforge::{ir, metrics, scenario, trace};
use smforge_core::compiler::{compile, CompiledMachine};
use smforge_core::runtime::{run_script, Fault, MachineIo, ScriptPlatform, Status};
use smforge_core::sim::{
    body_to_wheel, reference_machine, wheel_to_body, Pose, Scenario, Simulation,
    MAX_WHEEL_SPEED_CMS, WHEEL_DISTANCE_CM,
};
use smforge_core::{analyzer, corpus, dsl, ExecutionContext, Platform, RuntimeConfig, Value};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, budget: Duration) -> bool {
    elapsed < budget
}

fn kinematics() -> Verdict {
    let (v0, w0) = wheel_to_body(-0.7, -1.0, MAX_WHEEL_SPEED_CMS, WHEEL_DISTANCE_CM);
    let (v1, w1) = wheel_to_body(1.0, -1.0, MAX_WHEEL_SPEED_CMS, WHEEL_DISTANCE_CM);
    let pass = (v0 - -10.88).abs() == 0.0
        && (w0 - -0.75).abs() <= 0.005
        && v1 == 0.0
        && (w1 - -5.02).abs() <= 0.005;
    verdict(
        pass,
        format!("I=0 -> ({v0} cm/s, {w0:.6} rad/s); I=1 -> ({v1} cm/s, {w1:.6} rad/s)"),
    )
}

fn aggregation_machine() -> Arc<CompiledMachine> {
    Arc::new(reference_machine(
        corpus::AGGREGATION,
        corpus::AGGREGATION_MACHINE,
    ))
}

fn preconditions() -> Verdict {
    // (vl0, vr0) pairs whose body command breaks MoveClockwise's contract:
    // anticlockwise, no rotation, and no forward speed.
    let cases = [(-0.7, 1.0), (-1.0, -1.0), (1.0, -1.0)];
    let mut notes = Vec::new();
    let mut pass = true;
    for (vl, vr) in cases {
        let mut ctx = ExecutionContext::new(
            aggregation_machine(),
            ScriptPlatform,
            RuntimeConfig::default(),
        )
        .unwrap();
        ctx.set_var("vl0", Value::Real(vl));
        ctx.set_var("vr0", Value::Real(vr));
        let r = ctx.step().unwrap();
        let ok = matches!(&r.fault, Some(Fault::PreconditionViolation { op }) if op == "MoveClockwise")
            && matches!(ctx.status(), Status::Faulted(_));
        pass &= ok;
        notes.push(format!("({vl}, {vr}) -> {}", ctx.status()));
    }
    // The corpus values themselves satisfy the contract.
    let mut ctx = ExecutionContext::new(
        aggregation_machine(),
        ScriptPlatform,
        RuntimeConfig::default(),
    )
    .unwrap();
    pass &= ctx.step().unwrap().fault.is_none();
    verdict(pass, notes.join("; "))
}

/// Taxis platform without neighbours: turns complete after a random
/// number of calls, which moves the clock resets around.
struct TurnStub {
    rng: ChaCha8Rng,
    left: u32,
}

impl Platform for TurnStub {
    fn provides(&self, _op: &str) -> bool {
        true
    }

    fn publish(&mut self, _io: &mut MachineIo<'_>) {}

    fn invoke(&mut self, op: &str, _args: &[Value], io: &mut MachineIo<'_>) -> Result<(), String> {
        match op {
            "CalcCoherenceHeading" | "CalcAvoidanceHeading" => {
                self.left = self.rng.random_range(1..20);
                io.set("reached", Value::Bool(false));
            }
            "Turn" => {
                self.left = self.left.saturating_sub(1);
                io.set("reached", Value::Bool(self.left == 0));
            }
            _ => {}
        }
        Ok(())
    }
}

fn timer_law() -> Verdict {
    let cm = Arc::new(reference_machine(corpus::TAXIS, corpus::TAXIS_MACHINE));
    let forward = cm.state_index("Forward").unwrap();
    let coherence = cm.state_index("Coherence").unwrap();
    // Cycles needed for 25 units at each time unit, by exact arithmetic.
    let units = [(1.0, 25u64), (0.5, 50), (0.1, 250), (0.05, 500)];
    let mut checked = 0u64;
    let mut fired = 0u64;
    for seed in 0..200u64 {
        let (tu, need) = units[(seed % 4) as usize];
        let stub = TurnStub {
            rng: ChaCha8Rng::seed_from_u64(seed),
            left: 0,
        };
        let config = RuntimeConfig {
            time_unit: tu,
            ..RuntimeConfig::default()
        };
        let mut ctx = ExecutionContext::new(Arc::clone(&cm), stub, config).unwrap();
        let mut last_reset = 0u64;
        for n in 0..3 * need + 100 {
            let r = ctx.step().unwrap();
            if r.state_before == forward {
                let due = n - last_reset >= need;
                if (r.state_after == coherence) != due {
                    return verdict(
                        false,
                        format!("seed {seed}, time unit {tu}: cycle {n}, last reset {last_reset}"),
                    );
                }
                checked += 1;
                fired += due as u64;
            }
            if r.fired.is_some() {
                last_reset = n;
            }
        }
    }
    verdict(
        fired > 400,
        format!("{checked} Forward cycles over 200 runs, {fired} threshold firings"),
    )
}

/// Hand transcription of the aggregation controller: S1 sweeps back along
/// a clockwise arc with wheels (-0.7, -1.0), S2 spins clockwise with
/// (1.0, -1.0); seeRobot takes S1 to S2 and seeWall takes S2 to S1.
fn reference_wheels(script: &[Vec<String>]) -> Vec<(bool, (f64, f64))> {
    let (max, l) = (12.8, 5.1);
    let command = |vl: f64, vr: f64| {
        let c = body_to_wheel((vl + vr) / 2.0 * max, (vr - vl) * max / l, max, l);
        (c.left, c.right)
    };
    let mut spinning = false;
    script
        .iter()
        .map(|events| {
            let has = |e: &str| events.iter().any(|x| x == e);
            if !spinning && has("seeRobot") {
                spinning = true;
            } else if spinning && has("seeWall") {
                spinning = false;
            }
            let wheels = if spinning {
                command(1.0, -1.0)
            } else {
                command(-0.7, -1.0)
            };
            (spinning, wheels)
        })
        .collect()
}

fn oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let cm = aggregation_machine();
    let mut mismatches = 0;
    let mut transitions = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let script: Vec<Vec<String>> = (0..1000)
            .map(|_| {
                ["seeWall", "seeRobot"]
                    .iter()
                    .filter(|_| rng.random_bool(0.3))
                    .map(|e| e.to_string())
                    .collect()
            })
            .collect();
        let expected = reference_wheels(&script);
        let mut ctx =
            ExecutionContext::new(Arc::clone(&cm), ScriptPlatform, RuntimeConfig::default())
                .unwrap();
        for (events, (spinning, wheels)) in script.iter().zip(&expected) {
            let idx: Vec<usize> = events.iter().map(|e| cm.event_index(e).unwrap()).collect();
            let r = ctx.step_with(&idx).unwrap();
            transitions += r.fired.is_some() as u32;
            let get = |n: &str| ctx.var(n).and_then(|v| v.as_real()).unwrap();
            let c = body_to_wheel(get("linearSpeed"), get("angularSpeed"), 12.8, 5.1);
            let eq1 = if *spinning {
                (12.8, -12.8)
            } else {
                (-0.7 * 12.8, -12.8)
            };
            let same = (c.left, c.right) == *wheels
                && (r.state_after == 1) == *spinning
                && (c.left - eq1.0).abs() < 1e-9
                && (c.right - eq1.1).abs() < 1e-9;
            mismatches += !same as u32;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        mismatches == 0 && transitions > 0 && within(elapsed, Duration::from_secs(10)),
        format!("100 scripts x 1000 cycles, {transitions} transitions, {mismatches} mismatching cycles, {elapsed:.2?}"),
    )
}

fn traced(cm: CompiledMachine, script: &[Vec<String>]) -> String {
    let config = RuntimeConfig {
        watch: cm.vars.iter().map(|v| v.name.clone()).collect(),
        ..RuntimeConfig::default()
    };
    let cm = Arc::new(cm);
    let mut ctx = ExecutionContext::new(Arc::clone(&cm), ScriptPlatform, config).unwrap();
    trace::to_ndjson(&cm, &run_script(&mut ctx, script, u64::MAX).unwrap())
}

fn same_through_ir(cm: CompiledMachine, script: &[Vec<String>]) -> bool {
    let loaded = ir::load(&ir::serialize(std::slice::from_ref(&cm))).map(|mut v| v.remove(0));
    match loaded {
        Ok(l) => traced(cm, script) == traced(l, script),
        Err(_) => false,
    }
}

fn ir_fidelity() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut corpus_ok = 0;
    for (src, name) in [
        (corpus::AGGREGATION, corpus::AGGREGATION_MACHINE),
        (corpus::TAXIS, corpus::TAXIS_MACHINE),
    ] {
        let cm = reference_machine(src, name);
        let script = smforge_core::fuzz::script(&mut rng, &cm.events, 1000);
        corpus_ok += same_through_ir(cm, &script) as u32;
    }
    let workers = thread::available_parallelism()
        .map_or(4, |n| n.get())
        .min(16) as u64;
    let fuzz_ok: u32 = thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                s.spawn(move || {
                    let mut ok = 0;
                    for seed in (w..1000).step_by(workers as usize) {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        let fm = smforge_core::fuzz::model(&mut rng);
                        let model = analyzer::check(&dsl::parse(&fm.source).unwrap()).unwrap();
                        let cm = compile(&model, &fm.machine).unwrap();
                        let script = smforge_core::fuzz::script(&mut rng, &fm.events, 200);
                        ok += same_through_ir(cm, &script) as u32;
                    }
                    ok
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).sum()
    });
    let elapsed = start.elapsed();
    verdict(
        corpus_ok == 2 && fuzz_ok == 1000 && within(elapsed, Duration::from_secs(60)),
        format!("corpus {corpus_ok}/2, fuzz {fuzz_ok}/1000 byte-identical traces, {elapsed:.2?}"),
    )
}

fn shipped(name: &str) -> Scenario {
    let p = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name);
    scenario::parse(&std::fs::read_to_string(&p).unwrap(), &p)
        .unwrap()
        .scenario
}

struct Run {
    seed: u64,
    csv: String,
    poses: Vec<Pose>,
    first: smforge_core::sim::MetricsRow,
    last: smforge_core::sim::MetricsRow,
}

fn run_seeds(base: &Scenario) -> Vec<Run> {
    thread::scope(|s| {
        let handles: Vec<_> = (1..=10u64)
            .map(|seed| {
                let mut sc = base.clone();
                sc.seed = seed;
                s.spawn(move || {
                    let mut sim = Simulation::new(sc).unwrap();
                    let out = sim.run(|_, _| {}).unwrap();
                    Run {
                        seed,
                        csv: metrics::to_csv(seed, &out),
                        poses: sim.world.robots.iter().map(|b| b.pose).collect(),
                        first: out.initial,
                        last: *out.last(),
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    })
}

fn aggregation(runs: &[Run], elapsed: Duration) -> Verdict {
    let good = runs
        .iter()
        .filter(|r| r.last.cluster_fraction >= 0.9)
        .count();
    let detail: Vec<String> = runs
        .iter()
        .map(|r| format!("{}:{:.2}", r.seed, r.last.cluster_fraction))
        .collect();
    verdict(
        good >= 8 && within(elapsed, Duration::from_secs(120)),
        format!(
            "{good}/10 seeds with cluster_fraction >= 0.9 at 300 s [{}], {elapsed:.2?}",
            detail.join(" ")
        ),
    )
}

fn taxis(runs: &[Run], elapsed: Duration) -> Verdict {
    let ok = |r: &Run| {
        let (d0, d1) = (
            r.first.centroid_beacon_dist.unwrap(),
            r.last.centroid_beacon_dist.unwrap(),
        );
        d1 <= 0.5 * d0 && r.last.max_spread.unwrap() <= 100.0
    };
    let good = runs.iter().filter(|r| ok(r)).count();
    let detail: Vec<String> = runs
        .iter()
        .map(|r| {
            format!(
                "{}:{:.0}->{:.0}cm/spread {:.0}",
                r.seed,
                r.first.centroid_beacon_dist.unwrap(),
                r.last.centroid_beacon_dist.unwrap(),
                r.last.max_spread.unwrap()
            )
        })
        .collect();
    verdict(
        good >= 8 && within(elapsed, Duration::from_secs(180)),
        format!(
            "{good}/10 seeds halve the beacon distance with spread <= 100 cm [{}], {elapsed:.2?}",
            detail.join(" ")
        ),
    )
}

fn determinism(a: &[Run], b: &[Run]) -> Verdict {
    let same = a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.csv == y.csv && x.poses == y.poses);
    verdict(
        same,
        format!(
            "{} reruns, metrics CSVs and final poses identical: {same}",
            a.len()
        ),
    )
}

fn physics() -> Verdict {
    let mut sim = Simulation::new(Scenario::aggregation(1, 1, 10.0)).unwrap();
    sim.world.robots[0].pose = Pose::new(0.0, 0.0, 0.0);
    let (v, w) = wheel_to_body(-0.7, -1.0, MAX_WHEEL_SPEED_CMS, WHEEL_DISTANCE_CM);
    let r = v / w;
    let mut worst: f64 = 0.0;
    let mut lonely = true;
    for second in 1..=10 {
        for _ in 0..10 {
            sim.step_control(|_, rec| lonely &= rec.state_after == 0)
                .unwrap();
        }
        let t = second as f64;
        // Circular arc from the origin, heading 0, turning at w.
        let (x, y) = (r * (w * t).sin(), -r * ((w * t).cos() - 1.0));
        let p = sim.world.robots[0].pose;
        worst = worst.max((p.x - x).hypot(p.y - y));
    }
    verdict(
        lonely && worst <= 0.5 && (r - 14.45).abs() < 0.01,
        format!("radius {r:.3} cm, worst deviation {worst:.4} cm over 10 samples"),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Verdict)> = vec![
        (1, "kinematics exactness", kinematics()),
        (2, "precondition enforcement", preconditions()),
        (3, "timer law", timer_law()),
        (4, "oracle equivalence", oracle_equivalence()),
        (5, "IR fidelity", ir_fidelity()),
    ];

    let agg = shipped("aggregation.json");
    let tax = shipped("taxis.json");
    let t = Instant::now();
    let agg_runs = run_seeds(&agg);
    results.push((
        6,
        "emergent aggregation",
        aggregation(&agg_runs, t.elapsed()),
    ));
    let t = Instant::now();
    let tax_runs = run_seeds(&tax);
    results.push((7, "emergent swarm taxis", taxis(&tax_runs, t.elapsed())));
    let mut again = run_seeds(&agg);
    let mut tax_again = run_seeds(&tax);
    let mut first: Vec<Run> = agg_runs;
    first.extend(tax_runs);
    again.append(&mut tax_again);
    results.push((8, "determinism", determinism(&first, &again)));
    results.push((9, "physics sanity", physics()));

    let mut failed = 0;
    for (n, name, v) in &results {
        println!(
            "{} criterion {n} ({name}): {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += !v.pass as u32;
    }
    println!(
        "acceptance: {}/{} criteria passed",
        results.len() as u32 - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
