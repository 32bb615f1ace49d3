mod common;

use std::collections::BTreeMap;

use songwell_core::dialogue::{
    next_transition, Progress, Registry, StepId, TransitionKind, TransitionPolicy, VariableId,
};
use songwell_core::llm::{Speaker, StepRef};

#[test]
fn every_fill_subset_gates_every_step() {
    let registry = Registry::shipped();
    let revisions = BTreeMap::new();
    for mask in 0u32..(1 << VariableId::ALL.len()) {
        let mut vars = registry.fresh_variables();
        for (bit, id) in VariableId::ALL.into_iter().enumerate() {
            if mask & (1 << bit) != 0 {
                vars.fill(id, common::sample_value(id), 0);
            }
        }
        for step in registry.steps() {
            let expected = step.required.iter().all(|v| vars.is_filled(*v));
            assert_eq!(
                registry.check_step_complete(&step.name, &vars).unwrap(),
                expected,
                "{} mask {mask:#x}",
                step.name
            );
            let decision = next_transition(
                &registry,
                Progress { step: &step.name, vars: &vars, revisions: &revisions },
                TransitionPolicy::default(),
            )
            .unwrap();
            assert_eq!(decision.kind == TransitionKind::Stay, !expected, "{} mask {mask:#x}", step.name);
        }
    }
}

#[test]
fn registry_matches_the_protocol_table() {
    let registry = Registry::shipped();
    let table: Vec<(&str, Vec<&str>)> =
        registry.steps().iter().map(|s| (s.name.as_str(), s.required.iter().map(|v| v.as_str()).collect())).collect();
    assert_eq!(
        table,
        vec![
            ("rapport_building", vec!["user_ready"]),
            ("motivation_building", vec!["motivation", "difficulty", "emotion"]),
            ("discussion_music_preference", vec!["music_info"]),
            ("making_concept", vec!["concept"]),
            ("making_lyrics", vec!["lyrics_keyword", "lyrics_sentence", "lyrics_flow"]),
            ("lyrics_discussion", vec!["discussion_feedback", "lyrics_flag"]),
            ("making_music", vec!["title", "music_concept"]),
            ("revising_music", vec!["music_recreation"]),
            ("musical_self_exploration", vec!["music_opinion", "reflection"]),
        ]
    );
    let owned: usize = registry.steps().iter().map(|s| s.required.len()).sum();
    assert_eq!(owned, VariableId::ALL.len());
}

#[test]
fn forward_traversal_visits_steps_in_order() {
    let fixture = common::load_session("full");
    let engine = common::scripted_engine(&fixture);
    let played = fixture.play(&engine).unwrap();
    let mut visited: Vec<StepRef> = Vec::new();
    for turn in played.state.history.iter().filter(|t| t.speaker == Speaker::User) {
        if visited.last() != Some(&turn.state_at) {
            visited.push(turn.state_at.clone());
        }
    }
    let expected: Vec<StepRef> =
        engine.registry().steps().iter().map(|s| StepRef { state: s.state, step: s.name.clone() }).collect();
    assert_eq!(visited, expected);
    assert_eq!(played.state.vars.filled_count(), 16);
    assert!(!played.state.is_active());
    assert_eq!(played.state.current_step, StepId::from("musical_self_exploration"));
}
