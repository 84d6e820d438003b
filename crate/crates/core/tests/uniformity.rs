//! Goodness of fit for the random choices the protocol's secrecy rests on.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use clustervote::ballot::create_pool;
use clustervote::protocol::node::{extract, respond_query, rule_a_plan, NodeState};
use clustervote::ClusterConfig;

/// Upper-tail p-value of Pearson's statistic against equal expected counts.
fn chi_square_p(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn extraction_picks_uniformly_among_remaining() {
    let c = ClusterConfig::new(4, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut counts = vec![0u64; c.per_option()];
    for _ in 0..40_000 {
        let mut pool = create_pool(&c, 3);
        let mut node = NodeState::new(0, 0, vec![0, 1, 0], &pool);
        let b = extract(&mut node, &mut pool, 0, 0, &mut rng).unwrap();
        counts[b.get()] += 1;
    }
    let p = chi_square_p(&counts);
    assert!(p > 1e-3, "p = {p}, counts {counts:?}");
}

#[test]
fn extraction_stays_uniform_after_removals() {
    let c = ClusterConfig::new(4, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut counts = vec![0u64; c.per_option()];
    for _ in 0..40_000 {
        let mut pool = create_pool(&c, 3);
        let mut first = NodeState::new(0, 0, vec![0, 1, 0], &pool);
        extract(&mut first, &mut pool, 0, 0, &mut rng).unwrap();
        let mut second = NodeState::new(1, 0, vec![0, 1, 0], &pool);
        let b = extract(&mut second, &mut pool, 0, 0, &mut rng).unwrap();
        counts[b.get()] += 1;
    }
    // Every id is equally likely to be the second draw.
    assert!(chi_square_p(&counts) > 1e-3, "{counts:?}");
}

#[test]
fn extraction_order_is_uniform() {
    let c = ClusterConfig::new(4, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    // Round in which the extra ballot of the voted option comes first.
    let mut position_of_first_vote = vec![0u64; c.rounds()];
    for _ in 0..30_000 {
        let plan = rule_a_plan(2, &c, &mut rng).unwrap();
        position_of_first_vote[plan.iter().position(|&o| o == 2).unwrap()] += 1;
    }
    // Two copies of option 2 among four slots: first copy at i has weight 3-i.
    let total: u64 = position_of_first_vote.iter().sum();
    let weights = [3.0, 2.0, 1.0, 0.0];
    let stat: f64 = position_of_first_vote
        .iter()
        .zip(weights)
        .filter(|(_, w)| *w > 0.0)
        .map(|(&c, w)| {
            let e = total as f64 * w / 6.0;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    assert_eq!(position_of_first_vote[3], 0);
    let p = 1.0 - ChiSquared::new(2.0).unwrap().cdf(stat);
    assert!(p > 1e-3, "{position_of_first_vote:?}");
}

#[test]
fn honest_responses_are_uniform_over_held_ids() {
    let c = ClusterConfig::new(4, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut pool = create_pool(&c, 5);
    let mut node = NodeState::new(0, 1, vec![1, 0, 1], &pool);
    for (round, option) in [1, 0, 1].into_iter().enumerate() {
        extract(&mut node, &mut pool, round, option, &mut rng).unwrap();
    }
    let held = node.held(1).to_vec();
    assert_eq!(held.len(), 2);
    let mut counts = [0u64; 2];
    for _ in 0..20_000 {
        let b = respond_query(&node, 1, &mut rng).unwrap();
        counts[held.iter().position(|&h| h == b).unwrap()] += 1;
    }
    assert!(chi_square_p(&counts) > 1e-3, "{counts:?}");
}
