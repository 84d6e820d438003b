//! Replays of the worked four-voter example.

mod common;

use clustervote::adversary::Strategy;
use common::*;

#[test]
fn honest_sequence_yields_two_two() {
    let script = case1_script(case1_rounds());
    let out = run_scripted(&script, &vec![Strategy::honest(); 4], 1);
    assert!(out.result.is_valid(), "{:?}", out.result.reports());
    assert_eq!(out.result.remaining_published, vec![n(4), n(7), r(5), r(6)]);
    assert_eq!(out.result.tally, vec![2, 2]);
    assert_eq!(out.true_tally, vec![2, 2]);
    // Stage 1: pool delivery, 4 x 3 relays, final publish is the last of them.
    let counts = out.transcript.counts();
    assert_eq!(counts.stage1, 13);
    assert_eq!(counts.stage2, 24);
}

#[test]
fn honest_replay_is_deterministic() {
    let script = case1_script(case1_rounds());
    let a = run_scripted(&script, &vec![Strategy::honest(); 4], 9);
    let b = run_scripted(&script, &vec![Strategy::honest(); 4], 9);
    assert_eq!(a.transcript.to_lines(), b.transcript.to_lines());
    assert_eq!(a.result, b.result);
}

#[test]
fn cheated_sequence_shifts_one_vote_when_undetected() {
    let script = case1_script(case1_cheated_rounds());
    let mut strategies = vec![Strategy::honest(); 4];
    strategies[0] = Strategy::cheat1(N);
    let mut undetected = None;
    let mut detected = 0;
    for seed in 0..500 {
        let out = run_scripted(&script, &strategies, seed);
        assert!(out.reached_stage2, "the list itself is consistent");
        if out.result.is_valid() {
            assert_eq!(out.result.remaining_published, vec![n(7), r(1), r(5), r(6)]);
            assert_eq!(out.result.tally, vec![3, 1]);
            undetected.get_or_insert(seed);
        } else {
            detected += 1;
        }
    }
    assert!(undetected.is_some(), "the lie should sometimes survive");
    assert!(detected > 0, "the lie should sometimes be caught");
}
