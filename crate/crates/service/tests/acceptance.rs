//! Acceptance run: one PASS or FAIL line per criterion, each under its time budget.

#[path = "../../core/tests/common/oracle.rs"]
mod oracle;
mod support;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Barrier};
use std::thread;
use std::time::{Duration, Instant};

use songwell_core::align::{TimedEntry, TimedLyrics, TimingSource};
use songwell_core::dialogue::{
    next_transition, Progress, Registry, TherapyState, TransitionKind, TransitionPolicy, VariableId,
};
use songwell_core::llm::{ChatTurn, SimulatedBackend, Speaker, StepRef};
use songwell_core::music::{
    build_style_prompt, ingest_features, AnalysisFeatures, MusicComponents, PitchSample, MOCK_FEATURES,
};
use songwell_core::prompt::{
    compose_dialogue_prompt, DialogueInput, PromptKind, PromptLibrary, SectionId, DEFAULT_TURN_BUDGET,
};
use songwell_core::session::{parse_transcript, write_transcript, ExtractionOutcome, Record, SessionState};
use songwell_core::viz::{compile, serialize_script, MoodStyleTable};
use songwell_service::{replay, FileStore, MemoryStore, ServiceError, SessionService};

type Outcome = Result<String, String>;

const GOLDEN_VIZ: &str = include_str!("../../core/fixtures/golden/full-song-1.vizscript.json");
const COMMITTED_TRANSCRIPTS: [(&str, &str); 4] = [
    ("full", include_str!("../../core/fixtures/transcripts/full.jsonl")),
    ("revise-lyrics-loop", include_str!("../../core/fixtures/transcripts/revise-lyrics-loop.jsonl")),
    ("revert-to-lyrics", include_str!("../../core/fixtures/transcripts/revert-to-lyrics.jsonl")),
    ("revert-to-music", include_str!("../../core/fixtures/transcripts/revert-to-music.jsonl")),
];

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn play(name: &str) -> Result<(Vec<Record>, SessionState), String> {
    let fixture = support::fixture(name);
    let played = fixture.play(&support::scripted(&fixture)).map_err(|f| format!("{name}: {}", f.error))?;
    Ok((played.records, played.state))
}

fn state_machine() -> Outcome {
    let registry = Registry::shipped();
    let revisions = BTreeMap::new();
    let mut checked = 0usize;
    for mask in 0u32..(1 << VariableId::ALL.len()) {
        let mut vars = registry.fresh_variables();
        for (bit, id) in VariableId::ALL.into_iter().enumerate() {
            if mask & (1 << bit) != 0 {
                vars.fill(id, support::sample_value(id), 0);
            }
        }
        for step in registry.steps() {
            let complete = step.required.iter().all(|v| vars.is_filled(*v));
            let gated = registry.check_step_complete(&step.name, &vars).map_err(|e| e.to_string())?;
            let decision = next_transition(
                &registry,
                Progress { step: &step.name, vars: &vars, revisions: &revisions },
                TransitionPolicy::default(),
            )
            .map_err(|e| e.to_string())?;
            ensure(gated == complete && (decision.kind == TransitionKind::Stay) == !complete, || {
                format!("{} gates wrongly for mask {mask:#x}", step.name)
            })?;
            checked += 1;
        }
    }
    let (_, state) = play("full")?;
    let mut visited: Vec<StepRef> = Vec::new();
    for turn in state.history.iter().filter(|t| t.speaker == Speaker::User) {
        if visited.last() != Some(&turn.state_at) {
            visited.push(turn.state_at.clone());
        }
    }
    let order: Vec<StepRef> =
        registry.steps().iter().map(|s| StepRef { state: s.state, step: s.name.clone() }).collect();
    ensure(visited == order, || format!("visited {visited:?}"))?;
    ensure(state.vars.filled_count() == 16, || format!("{} variables filled", state.vars.filled_count()))?;
    Ok(format!("{checked} mask/step pairs, {} steps in order, 16 variables filled", order.len()))
}

fn revisions() -> Outcome {
    let cases = [
        ("revise-lyrics-loop", TherapyState::MakingLyrics),
        ("revert-to-lyrics", TherapyState::MakingLyrics),
        ("revert-to-music", TherapyState::MakingMusic),
    ];
    let mut counts = Vec::new();
    for (name, target) in cases {
        let (records, state) = play(name)?;
        ensure(state.last_decision.as_ref().is_some_and(|d| d.kind == TransitionKind::EndSession), || {
            format!("{name} did not end")
        })?;
        let a = &state.artifacts;
        // The artifact the revision regenerates; a revert to lyrics also regenerates the song.
        let versions = match name {
            "revise-lyrics-loop" => a.lyrics_versions.len(),
            "revert-to-lyrics" if a.songs.len() == a.lyrics_versions.len() => a.lyrics_versions.len(),
            "revert-to-lyrics" => 0,
            _ if a.style_prompts.len() == a.songs.len() => a.songs.len(),
            _ => 0,
        };
        ensure(versions == 2, || {
            format!(
                "{name}: lyrics {}, styles {}, songs {}",
                a.lyrics_versions.len(),
                a.style_prompts.len(),
                a.songs.len()
            )
        })?;
        counts.push(versions.to_string());
        let at = records
            .iter()
            .position(|r| matches!(r, Record::Transition(t) if t.revision_of == Some(target)))
            .ok_or_else(|| format!("{name}: no revision of {target}"))?;
        let engine = support::scripted(&support::fixture(name));
        let before = engine.fold(&records[..at]).map_err(|e| e.to_string())?;
        for id in VariableId::ALL.into_iter().filter(|id| engine.registry().owner(*id).state < target) {
            let same = serde_json::to_vec(&before.vars.entry(id)).unwrap()
                == serde_json::to_vec(&state.vars.entry(id)).unwrap();
            ensure(same, || format!("{name}: {id} changed across the revision"))?;
        }
    }
    Ok(format!("version counts {}, earlier states preserved", counts.join("/")))
}

fn prompts() -> Outcome {
    const ROLE: &str = "You are a therapeutic assistant designed to support counseling and music therapy for DHH individuals through songwriting.";
    const CRISIS: &str = "If the user expresses severe distress or self-harm thoughts";
    const PLAIN: &str = "Output should be in plain string format only.";
    let registry = Registry::shipped();
    let library = PromptLibrary::shipped();
    let history: Vec<ChatTurn> = (0..4)
        .map(|i| ChatTurn {
            index: i,
            speaker: if i % 2 == 0 { Speaker::Agent } else { Speaker::User },
            text: format!("message {i}"),
            option_chips: vec![],
            state_at: StepRef {
                state: TherapyState::TherapeuticConnection,
                step: registry.initial_step().name.clone(),
            },
        })
        .collect();
    let mut bundles = 0;
    for (pos, step) in registry.steps().iter().enumerate() {
        for filled in 0..step.required.len() {
            let mut vars = registry.fresh_variables();
            for v in registry.steps()[..pos].iter().flat_map(|s| &s.required).chain(&step.required[..filled]) {
                vars.fill(*v, support::sample_value(*v), 1);
            }
            let input = DialogueInput {
                user_name: "Mina",
                history: &history,
                step,
                vars: &vars,
                notes: &[],
                turn_budget: DEFAULT_TURN_BUDGET,
            };
            let bundle = compose_dialogue_prompt(input, &library).map_err(|e| e.to_string())?;
            let text = &bundle.rendered_text;
            ensure(bundle.kind == PromptKind::Dialogue, || "wrong kind".into())?;
            ensure(text.contains(ROLE) && text.contains(CRISIS) && text.contains(PLAIN), || {
                format!("{}: fixed rules missing", step.name)
            })?;
            let own = library.guidance_for(step.name.as_str()).ok_or("missing guidance")?;
            ensure(bundle.section(SectionId::StateGuidance).is_some_and(|s| s.text.contains(own)), || {
                format!("{}: own guidance missing", step.name)
            })?;
            for other in registry.steps().iter().filter(|s| s.name != step.name) {
                let theirs = library.guidance_for(other.name.as_str()).ok_or("missing guidance")?;
                ensure(!text.contains(theirs), || format!("{} carries guidance of {}", step.name, other.name))?;
            }
            let listed: Vec<String> = bundle
                .section(SectionId::RequiredVariables)
                .ok_or("no variable section")?
                .text
                .lines()
                .filter_map(|l| l.strip_prefix("- ")?.split_once(':').map(|(n, _)| n.to_string()))
                .collect();
            let unfilled: Vec<String> = step.required[filled..].iter().map(|v| v.to_string()).collect();
            ensure(listed == unfilled, || format!("{}: listed {listed:?}, unfilled {unfilled:?}", step.name))?;
            bundles += 1;
        }
    }
    Ok(format!("{bundles} dialogue bundles"))
}

fn alignment() -> Outcome {
    let exhaustive = oracle::exhaustive_alignment_check(6)?;
    oracle::random_alignment_check(200, 10, 7)?;
    Ok(format!("{exhaustive} canonical pairs up to length 6, 200 random pairs up to length 10"))
}

fn timing() -> Outcome {
    let hand = oracle::hand_timing_check()?;
    oracle::random_timing_check(500, 11)?;
    let pred = vec![("rain".to_string(), 120, 480), ("falls".to_string(), 610, 1333)];
    let got = oracle::transfer(&pred, "rain falls", 2000).map_err(|e| e.to_string())?;
    ensure(oracle::spans(&got) == [(120, 480), (610, 1333)], || "identity transfer changed timings".into())?;
    Ok(format!("identity exact, {hand} hand cases, 500 random cases well formed"))
}

fn style_prompt() -> Outcome {
    oracle::random_style_check(1000, 3)?;
    let example = MusicComponents {
        instrumentation: vec!["piano".into()],
        tempo: Some("slow tempo".into()),
        mood: Some("emotional".into()),
        ..Default::default()
    };
    let got: BTreeSet<String> = build_style_prompt(&example).map_err(|e| e.to_string())?.keywords.into_iter().collect();
    let want: BTreeSet<String> = ["piano", "slow tempo", "emotional"].map(String::from).into();
    ensure(got == want, || format!("example gave {got:?}"))?;
    Ok("1000 random sets within 150 chars and deduplicated, example keywords exact".into())
}

fn one_sample_spans(features: &AnalysisFeatures<f64>) -> TimedLyrics {
    let entries = features
        .pitch_contour
        .iter()
        .map(|s| TimedEntry {
            lyric_token: format!("t{}", s.time_ms),
            start_ms: s.time_ms,
            end_ms: s.time_ms + 1,
            source: TimingSource::Matched,
        })
        .collect();
    TimedLyrics { entries }
}

fn viz() -> Outcome {
    let (_, state) = play("full")?;
    let doc = serialize_script(state.artifacts.viz_scripts.first().ok_or("no viz script")?);
    ensure(doc == GOLDEN_VIZ, || "golden viz script differs".into())?;

    let table = MoodStyleTable::shipped();
    let features = ingest_features::<f64>(MOCK_FEATURES).map_err(|e| e.to_string())?.features;
    let spans = one_sample_spans(&features);
    let script = compile(&spans, &features, &table, 30_000).map_err(|e| e.to_string())?.script;
    let pitches: Vec<f64> = features.pitch_contour.iter().map(|s| s.pitch_hz).collect();
    let lo = pitches.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = pitches.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for (event, pitch) in script.lyric_events.iter().zip(&pitches) {
        ensure(*pitch != lo || event.y_norm.abs() < 1e-9, || format!("min pitch at {}", event.y_norm))?;
        ensure(*pitch != hi || (event.y_norm - 1.0).abs() < 1e-9, || format!("max pitch at {}", event.y_norm))?;
    }

    let beats = features.beats.len();
    let mut scripts = 0;
    for (name, _) in support::SESSION_FIXTURES {
        let (_, state) = play(name)?;
        for s in &state.artifacts.viz_scripts {
            ensure(s.beat_events.len() == beats, || format!("{name}: {} of {beats} beats", s.beat_events.len()))?;
            scripts += 1;
        }
    }

    let mut flat = features.clone();
    flat.pitch_contour =
        flat.pitch_contour.iter().map(|s| PitchSample { time_ms: s.time_ms, pitch_hz: 196.0 }).collect();
    let script = compile(&spans, &flat, &table, 30_000).map_err(|e| e.to_string())?.script;
    ensure(script.lyric_events.iter().all(|e| e.y_norm == 0.5), || "constant contour off center".into())?;
    Ok(format!("golden equal, extremes at 0 and 1, {beats} beats kept in {scripts} scripts, constant contour at 0.5"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for (name, _) in support::SESSION_FIXTURES {
        let fixture = support::fixture(name);
        let engine = support::scripted(&fixture);
        let store = Arc::new(FileStore::open(dir.path().join(name)).map_err(|e| e.to_string())?);
        let svc = SessionService::new(engine.clone(), store).map_err(|e| e.to_string())?;
        let id = svc.create(&fixture.user_name).map_err(|e| e.to_string())?.id;
        for m in &fixture.messages {
            svc.turn(&id, m).map_err(|e| format!("{name}: {e}"))?;
        }
        let exported = svc.transcript(&id).map_err(|e| e.to_string())?;
        let report = replay(&engine, &exported).map_err(|e| format!("{name}: {e}"))?;
        ensure(report.matches(), || format!("{name}: {:?}", report.differences))?;
        ensure(report.original == *svc.get(&id).map_err(|e| e.to_string())?, || {
            format!("{name}: fold differs from the live state")
        })?;

        let (_, committed) = COMMITTED_TRANSCRIPTS.iter().find(|(n, _)| *n == name).ok_or("missing transcript")?;
        let report = replay(&engine, committed).map_err(|e| format!("{name}: {e}"))?;
        ensure(report.matches(), || format!("committed {name}: {:?}", report.differences))?;

        let (first, _) = play(name)?;
        let (second, _) = play(name)?;
        ensure(write_transcript(&first).as_bytes() == write_transcript(&second).as_bytes(), || {
            format!("{name}: runs differ")
        })?;
        ensure(write_transcript(&first) == exported, || format!("{name}: service and engine transcripts differ"))?;
    }
    Ok("4 fixtures: export and replay match, committed transcripts replay, repeated runs byte-identical".into())
}

fn isolation() -> Outcome {
    // Extraction failure: variables stay bit-identical.
    let bad = support::Hooked::new(|r| {
        (r.purpose == PromptKind::Extraction && r.turn == 3).then(|| Ok("no json here".into()))
    });
    let svc =
        SessionService::new(support::engine_with(bad), Arc::new(MemoryStore::default())).map_err(|e| e.to_string())?;
    let id = svc.create("Mina").map_err(|e| e.to_string())?.id;
    let pre = svc.turn(&id, "hello").map_err(|e| e.to_string())?.state;
    let after = svc.turn(&id, "something").map_err(|e| e.to_string())?.state;
    ensure(serde_json::to_vec(&pre.vars).unwrap() == serde_json::to_vec(&after.vars).unwrap(), || {
        "variables changed".into()
    })?;
    let records = parse_transcript(&svc.transcript(&id).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let failed = records
        .iter()
        .any(|r| matches!(r, Record::Extraction(x) if matches!(x.outcome, ExtractionOutcome::Failed { .. })));
    ensure(failed, || "no failed extraction recorded".into())?;

    // Crash in the middle of a turn: a restart sees the pre-turn state plus the user turn.
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let crash = Arc::new(AtomicBool::new(false));
    let flag = crash.clone();
    let crashing = support::Hooked::new(move |r| {
        if flag.load(Ordering::SeqCst) && r.purpose == PromptKind::Dialogue {
            panic!("injected crash");
        }
        None
    });
    let open = || FileStore::open(dir.path()).map(Arc::new).map_err(|e| e.to_string());
    let svc = SessionService::new(support::engine_with(crashing), open()?).map_err(|e| e.to_string())?;
    let id = svc.create("Mina").map_err(|e| e.to_string())?.id;
    let pre = svc.turn(&id, "hello").map_err(|e| e.to_string())?.state;
    crash.store(true, Ordering::SeqCst);
    let hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let crashed = catch_unwind(AssertUnwindSafe(|| svc.turn(&id, "I feel tired"))).is_err();
    std::panic::set_hook(hook);
    ensure(crashed, || "the crash was not injected".into())?;
    drop(svc);
    let restarted =
        SessionService::new(support::engine_with(Arc::new(SimulatedBackend)), open()?).map_err(|e| e.to_string())?;
    let (_, expected) = restarted.engine().accept_user_turn(&pre, "I feel tired").map_err(|f| f.error.to_string())?;
    ensure(*restarted.get(&id).map_err(|e| e.to_string())? == expected, || {
        "persisted state is not pre-turn plus user turn".into()
    })?;

    // Concurrent storm: one turn wins each round, the rest are told the session is busy.
    let slow = support::Hooked::new(|r| {
        if r.purpose == PromptKind::Dialogue {
            thread::sleep(Duration::from_millis(150));
        }
        None
    });
    let svc = Arc::new(
        SessionService::new(support::engine_with(slow), Arc::new(MemoryStore::default())).map_err(|e| e.to_string())?,
    );
    let id = svc.create("Mina").map_err(|e| e.to_string())?.id;
    let rounds = 5;
    for round in 0..rounds {
        let barrier = Arc::new(Barrier::new(16));
        let handles: Vec<_> = (0..16)
            .map(|t| {
                let (svc, id, barrier) = (svc.clone(), id.clone(), barrier.clone());
                thread::spawn(move || {
                    barrier.wait();
                    svc.turn(&id, &format!("round {round} writer {t}"))
                })
            })
            .collect();
        let results: Vec<_> = handles.into_iter().map(|h| h.join().expect("writer thread")).collect();
        let ok = results.iter().filter(|r| r.is_ok()).count();
        let busy = results.iter().filter(|r| matches!(r, Err(ServiceError::Busy(_)))).count();
        ensure(ok == 1 && busy == 15, || format!("round {round}: {ok} succeeded, {busy} busy"))?;
    }
    let state = svc.get(&id).map_err(|e| e.to_string())?;
    ensure(state.history.len() == 1 + 2 * rounds, || format!("{} turns after the storm", state.history.len()))?;
    Ok(format!("variables unchanged on failed extraction, crash keeps only the user turn, {rounds} storm rounds with one winner each"))
}

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            name: "state machine gating and forward traversal",
            budget: Duration::from_secs(5),
            run: state_machine,
        },
        Criterion { name: "revision fixtures", budget: Duration::from_secs(5), run: revisions },
        Criterion { name: "prompt composition", budget: Duration::from_secs(2), run: prompts },
        Criterion { name: "alignment against brute force", budget: Duration::from_secs(60), run: alignment },
        Criterion { name: "timing transfer", budget: Duration::from_secs(10), run: timing },
        Criterion { name: "style prompt", budget: Duration::from_secs(5), run: style_prompt },
        Criterion { name: "visualization script", budget: Duration::from_secs(5), run: viz },
        Criterion { name: "determinism and replay", budget: Duration::from_secs(10), run: determinism },
        Criterion { name: "isolation and atomicity", budget: Duration::from_secs(30), run: isolation },
    ];
    let started = Instant::now();
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(c.run).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = t.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > c.budget => Err(format!("over budget: {detail}")),
            other => other,
        };
        let (mark, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(e) => {
                failed += 1;
                ("FAIL", e)
            }
        };
        println!("{mark} {} {} ({:.2}s of {}s): {detail}", i + 1, c.name, elapsed.as_secs_f64(), c.budget.as_secs());
    }
    println!(
        "{} of {} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
