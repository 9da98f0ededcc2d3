use std::path::Path;
use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smforge::ir::{self, IrError};
use smforge::{metrics, scenario, trace};
use smforge_core::compiler::{compile, CompiledMachine, Instr};
use smforge_core::runtime::{run_script, ScriptPlatform};
use smforge_core::sim::{ControllerKind, MetricsRow, SimOutcome};
use smforge_core::{analyzer, corpus, dsl, ExecutionContext, RuntimeConfig};

fn build(src: &str, machine: &str) -> CompiledMachine {
    let model = analyzer::check(&dsl::parse(src).unwrap()).unwrap();
    compile(&model, machine).unwrap()
}

fn corpus_machines() -> [CompiledMachine; 2] {
    [
        build(corpus::AGGREGATION, corpus::AGGREGATION_MACHINE),
        build(corpus::TAXIS, corpus::TAXIS_MACHINE),
    ]
}

/// Re-sign a tampered document so only the decode/validate stages see it.
fn resign(mut doc: serde_json::Value) -> String {
    doc.as_object_mut().unwrap().remove("crc32");
    let body = doc.to_string();
    format!(
        "{},\"crc32\":\"{:08x}\"}}",
        &body[..body.len() - 1],
        crc32fast::hash(body.as_bytes())
    )
}

#[test]
fn corpus_roundtrip() {
    for cm in corpus_machines() {
        let text = ir::serialize(std::slice::from_ref(&cm));
        let back = ir::load(&text).unwrap();
        assert_eq!(back, std::slice::from_ref(&cm));
        assert_eq!(ir::serialize(&back), text);
    }
}

#[test]
fn document_layout() {
    let [agg, _] = corpus_machines();
    let text = ir::serialize(&[agg]);
    assert!(text.starts_with("{\"machines\":[{"));
    assert!(text.ends_with("\"}\n"));
    assert_eq!(text.lines().count(), 1);
    let tail = &text[text.rfind(",\"crc32\":\"").unwrap()..];
    assert_eq!(tail.len(), ",\"crc32\":\"\"}\n".len() + 8);
    assert!(text.contains(",\"version\":1,\"crc32\":"));
    // Independent check of the trailing checksum.
    let body = format!("{}}}", &text[..text.rfind(",\"crc32\"").unwrap()]);
    let crc = format!("{:08x}", crc32fast::hash(body.as_bytes()));
    assert!(tail.contains(&crc));
    // Keys of each object are sorted; programs are opcode/operand pairs.
    assert!(text.contains("\"action\":null,\"event\":1,\"guard\":null,\"src\":0,\"tgt\":1"));
    assert!(text.contains("[\"load_local\",0],[\"push_real\",0.0],[\"lt\",null]"));
    assert!(text.contains("{\"init\":-0.7,\"name\":\"vl0\",\"type\":\"real\"}"));
}

#[test]
fn taxis_shape() {
    let [_, taxis] = corpus_machines();
    let doc: serde_json::Value = serde_json::from_str(&ir::serialize(&[taxis])).unwrap();
    let m = &doc["machines"][0];
    assert_eq!(m["states"].as_array().unwrap().len(), 3);
    assert_eq!(m["clocks"], serde_json::json!(["T"]));
    assert_eq!(
        m["transitions"][1]["guard"],
        serde_json::json!([["since", 0], ["push_int", 25], ["ge", null]])
    );
    assert_eq!(m["definedOps"][0]["name"], "UpdateAvoidanceRadius");
}

#[test]
fn corrupted_documents_are_rejected() {
    let [agg, _] = corpus_machines();
    let text = ir::serialize(&[agg]);

    let flipped = text.replacen("\"S2\"", "\"S3\"", 1);
    assert!(matches!(ir::load(&flipped), Err(IrError::Checksum { .. })));
    assert!(matches!(
        ir::load(&text[..text.len() / 2]),
        Err(IrError::Json(_))
    ));
    assert!(matches!(ir::load("[1, 2]"), Err(IrError::Decode(_))));

    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["version"] = serde_json::json!(2);
    assert!(matches!(ir::load(&resign(doc)), Err(IrError::Version(_))));

    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc.as_object_mut().unwrap().remove("crc32");
    assert!(matches!(
        ir::load(&doc.to_string()),
        Err(IrError::Decode(_))
    ));

    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["machines"][0]["transitions"][0]["tgt"] = serde_json::json!(7);
    assert!(matches!(ir::load(&resign(doc)), Err(IrError::Invalid(_))));

    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["machines"][0]["states"][0]["entry"][0] = serde_json::json!(["frobnicate", 1]);
    assert!(matches!(ir::load(&resign(doc)), Err(IrError::Decode(_))));

    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["machines"][0]["vars"][0]["init"] = serde_json::json!(true);
    assert!(matches!(ir::load(&resign(doc)), Err(IrError::Decode(_))));
}

#[test]
fn machine_selection() {
    let [agg, taxis] = corpus_machines();
    let text = ir::serialize(&[agg.clone(), taxis.clone()]);
    assert_eq!(
        ir::load_machine(&text, Some("SwarmTaxisFSM")).unwrap(),
        taxis
    );
    assert!(ir::load_machine(&text, None).is_err());
    assert!(ir::load_machine(&text, Some("Nope")).is_err());
    assert_eq!(
        ir::load_machine(&ir::serialize(std::slice::from_ref(&agg)), None).unwrap(),
        agg
    );
}

#[test]
fn special_reals_survive() {
    let mut cm = build("machine M { initial state A {} }", "M");
    cm.states[0].entry = None;
    cm.transitions
        .push(smforge_core::compiler::CompiledTransition {
            source: 0,
            target: 0,
            event: None,
            guard: Some(smforge_core::compiler::Program::new(vec![
                Instr::PushReal(f64::INFINITY),
                Instr::PushReal(-0.0),
                Instr::PushReal(5e-324),
                Instr::Add,
                Instr::Lt,
            ])),
            action: None,
        });
    let back = ir::load(&ir::serialize(std::slice::from_ref(&cm))).unwrap();
    let code = &back[0].transitions[0].guard.as_ref().unwrap().code;
    assert_eq!(code[0], Instr::PushReal(f64::INFINITY));
    assert!(matches!(code[1], Instr::PushReal(z) if z == 0.0 && z.is_sign_negative()));
    assert_eq!(code[2], Instr::PushReal(5e-324));
}

fn fuzz_machine(seed: u64) -> (CompiledMachine, Vec<String>) {
    let fm = smforge_core::fuzz::model(&mut ChaCha8Rng::seed_from_u64(seed));
    (build(&fm.source, &fm.machine), fm.events)
}

proptest! {
    #[test]
    fn fuzz_ir_is_idempotent(seed in any::<u64>()) {
        let (cm, _) = fuzz_machine(seed);
        let text = ir::serialize(std::slice::from_ref(&cm));
        let back = ir::load(&text).unwrap();
        prop_assert_eq!(&back[0], &cm);
        prop_assert_eq!(ir::serialize(&back), text);
    }

    #[test]
    fn loaded_machines_trace_identically(seed in any::<u64>()) {
        let (cm, events) = fuzz_machine(seed);
        let script = smforge_core::fuzz::script(&mut ChaCha8Rng::seed_from_u64(seed ^ 1), &events, 50);
        let loaded = ir::load(&ir::serialize(std::slice::from_ref(&cm))).unwrap().remove(0);
        let run = |m: CompiledMachine| {
            let config = RuntimeConfig { watch: m.vars.iter().map(|v| v.name.clone()).collect(), ..RuntimeConfig::default() };
            let m = Arc::new(m);
            let mut ctx = ExecutionContext::new(Arc::clone(&m), ScriptPlatform, config).unwrap();
            trace::to_ndjson(&m, &run_script(&mut ctx, &script, 1000).unwrap())
        };
        prop_assert_eq!(run(cm), run(loaded));
    }
}

#[test]
fn trace_lines() {
    let cm = Arc::new(build(corpus::AGGREGATION, corpus::AGGREGATION_MACHINE));
    let config = RuntimeConfig {
        watch: vec!["linearSpeed".into(), "angularSpeed".into()],
        ..RuntimeConfig::default()
    };
    let mut ctx = ExecutionContext::new(Arc::clone(&cm), ScriptPlatform, config).unwrap();
    let script = vec![vec![], vec!["seeRobot".to_string()]];
    let lines = trace::to_ndjson(&cm, &run_script(&mut ctx, &script, 10).unwrap());
    let lines: Vec<serde_json::Value> = lines
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["cycle"], 0);
    assert_eq!(lines[0]["state_before"], "S1");
    assert_eq!(lines[0]["fired"], serde_json::Value::Null);
    assert_eq!(lines[0]["ops"][0]["name"], "MoveClockwise");
    assert_eq!(lines[0]["watch"]["linearSpeed"], -10.88);
    assert_eq!(lines[1]["events"], serde_json::json!(["seeRobot"]));
    assert_eq!(lines[1]["fired"], 0);
    assert_eq!(lines[1]["state_after"], "S2");
    assert_eq!(lines[1]["watch"]["linearSpeed"], 0.0);
    let keys: Vec<&String> = lines[1].as_object().unwrap().keys().collect();
    assert_eq!(
        keys,
        [
            "cycle",
            "events",
            "fired",
            "ops",
            "state_after",
            "state_before",
            "watch"
        ]
    );
}

#[test]
fn scripts() {
    let cm = build(corpus::AGGREGATION, corpus::AGGREGATION_MACHINE);
    let text = "{\"cycle\": 2, \"events\": [\"seeRobot\"]}\n\n{\"cycle\": 0, \"events\": []}\n{\"cycle\": 2, \"events\": [\"seeWall\", \"seeRobot\"]}\n";
    let s = trace::parse_script(text, &cm).unwrap();
    assert_eq!(
        s,
        vec![
            vec![],
            vec![],
            vec!["seeRobot".to_string(), "seeWall".to_string()]
        ]
    );
    assert_eq!(
        trace::parse_script(&trace::script_ndjson(&s), &cm).unwrap(),
        s
    );
    assert!(trace::parse_script("", &cm).unwrap().is_empty());
    assert!(matches!(
        trace::parse_script("{\"cycle\": 0, \"events\": [\"boom\"]}", &cm),
        Err(trace::ScriptError::UnknownEvent { line: 1, .. })
    ));
    assert!(matches!(
        trace::parse_script("{\"cycle\": -1}", &cm),
        Err(trace::ScriptError::Json { .. })
    ));
    assert!(matches!(
        trace::parse_script("{\"cycle\": 0, \"evnts\": []}", &cm),
        Err(trace::ScriptError::Json { .. })
    ));
}

#[test]
fn scenario_files() {
    let p = Path::new("/tmp/x/agg.json");
    let cfg = scenario::parse(
        r#"{"robots": 20, "seed": 7, "duration_s": 300, "controller": "aggregation", "arena": {"w_cm": 250, "h_cm": 250}}"#,
        p,
    )
    .unwrap();
    assert_eq!(cfg.scenario.robots, 20);
    assert_eq!(cfg.scenario.seed, 7);
    assert_eq!(cfg.scenario.beacon, None);
    assert_eq!(cfg.metrics, Path::new("/tmp/x/agg.metrics.csv"));
    assert!(cfg.trace.is_none());

    let cfg = scenario::parse(
        r#"{"robots": 5, "seed": 1, "duration_s": 10, "controller": "taxis", "arena": {"w_cm": 600, "h_cm": 300},
            "params": {"turn_rate_rads": 2.0, "coherence_range_cm": 100},
            "outputs": {"metrics": "m.csv", "trace": "t.ndjson"}}"#,
        p,
    )
    .unwrap();
    assert_eq!(cfg.scenario.beacon, Some((300.0, 0.0)));
    assert_eq!(cfg.scenario.params.turn_rate, 2.0);
    assert_eq!(cfg.scenario.params.coherence_range, 100.0);
    assert_eq!(
        cfg.scenario.params.time_unit_s,
        smforge_core::sim::TAXIS_TIME_UNIT_S
    );
    assert_eq!(cfg.metrics, Path::new("/tmp/x/m.csv"));
    assert_eq!(cfg.trace.as_deref(), Some(Path::new("/tmp/x/t.ndjson")));

    let cfg = scenario::parse(
        r#"{"robots": 5, "seed": 1, "duration_s": 10, "controller": "taxis", "beacon": null}"#,
        p,
    )
    .unwrap();
    assert_eq!(cfg.scenario.beacon, None);
    let cfg = scenario::parse(
        r#"{"robots": 5, "seed": 1, "duration_s": 10, "controller": "taxis", "beacon": {"x_cm": 1, "y_cm": 2}}"#,
        p,
    )
    .unwrap();
    assert_eq!(cfg.scenario.beacon, Some((1.0, 2.0)));

    for bad in [
        r#"{"robots": 5, "seed": 1, "duration_s": 10, "controller": "flocking"}"#,
        r#"{"robots": 5, "seed": 1, "duration_s": 10, "controller": "taxis", "params": {"speed": 1}}"#,
        r#"{"robots": 5, "seed": 1, "controller": "taxis"}"#,
        r#"{"robots": 5, "seed": 1, "duration_s": 10, "controller": "taxis", "extra": 1}"#,
    ] {
        assert!(
            matches!(
                scenario::parse(bad, p),
                Err(scenario::ScenarioError::Json(_))
            ),
            "{bad}"
        );
    }
}

#[test]
fn scenario_with_ir_controller() {
    let dir = tempfile::tempdir().unwrap();
    let [_, taxis] = corpus_machines();
    std::fs::write(
        dir.path().join("taxis.smir.json"),
        ir::serialize(std::slice::from_ref(&taxis)),
    )
    .unwrap();
    let p = dir.path().join("s.json");
    let cfg = scenario::parse(
        r#"{"robots": 3, "seed": 1, "duration_s": 5, "controller": {"ir": "taxis.smir.json"}}"#,
        &p,
    )
    .unwrap();
    assert_eq!(
        cfg.scenario.controller,
        ControllerKind::External(Arc::new(taxis))
    );
    assert!(cfg.scenario.beacon.is_some());
    assert!(matches!(
        scenario::parse(
            r#"{"robots": 3, "seed": 1, "duration_s": 5, "controller": {"ir": "missing.smir.json"}}"#,
            &p
        ),
        Err(scenario::ScenarioError::Io { .. })
    ));
}

#[test]
fn metrics_csv() {
    let row = |t: f64, d: Option<f64>| MetricsRow {
        t_s: t,
        cluster_fraction: 0.25,
        centroid_beacon_dist: d,
        max_spread: d.map(|x| x / 2.0),
    };
    let outcome = SimOutcome {
        initial: row(0.0, None),
        rows: vec![row(1.0, None), row(2.0, None)],
    };
    let csv = metrics::to_csv(9, &outcome);
    let expected = format!(
        "# smforge {}; seed 9; rng ChaCha8Rng\nt_s,cluster_fraction,centroid_beacon_dist_cm,max_spread_cm\n1,0.25,,\n2,0.25,,\n",
        smforge_core::VERSION
    );
    assert_eq!(csv, expected);
    let outcome = SimOutcome {
        initial: row(0.0, Some(1.0)),
        rows: vec![row(1.0, Some(150.5))],
    };
    assert!(metrics::to_csv(1, &outcome).ends_with("\n1,0.25,150.5,75.25\n"));
    assert_eq!(
        metrics::summary(outcome.last()),
        "t_s=1 cluster_fraction=0.25 centroid_beacon_dist_cm=150.5 max_spread_cm=75.25"
    );
}

#[test]
fn diagnostics_formats() {
    let src = "machine M { initial state A transition A -> B }";
    let diags = analyzer::check(&dsl::parse(src).unwrap()).unwrap_err();
    let text = smforge::diagnostics::to_text("m.rcm", &diags);
    assert!(text.starts_with("m.rcm:1:"), "{text}");
    assert!(text.contains(" E04 error: "));
    let json: serde_json::Value =
        serde_json::from_str(&smforge::diagnostics::to_json("m.rcm", &diags)).unwrap();
    let d = &json[0];
    for key in [
        "code", "severity", "file", "line", "col", "endLine", "endCol", "message",
    ] {
        assert!(d.get(key).is_some(), "missing {key}");
    }
    assert_eq!(d["code"], "E04");
    assert_eq!(d["severity"], "error");
    assert_eq!(smforge::diagnostics::to_json("m.rcm", &[]), "[]\n");
}
