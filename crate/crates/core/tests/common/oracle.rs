//! Dense straight-line reference iterations, written without the library's
//! engine. A toy graph is a `users x items` matrix of optional ratings.

#![allow(dead_code)]

pub type Dense = Vec<Vec<Option<f64>>>;

pub fn to_graph(d: &Dense) -> rankproj::RatingGraph {
    let mut links = Vec::new();
    for (u, row) in d.iter().enumerate() {
        for (a, r) in row.iter().enumerate() {
            if let Some(r) = r {
                links.push(rankproj::Link::new(u, a, *r));
            }
        }
    }
    rankproj::RatingGraph::new(d.len(), d[0].len(), links).unwrap()
}

fn quality_step(d: &Dense, rep: &[f64], penalty: bool) -> Vec<f64> {
    let items = d[0].len();
    let mut q = vec![0.0; items];
    for a in 0..items {
        let mut num = 0.0;
        let mut den = 0.0;
        let mut plain = 0.0;
        let mut count = 0.0;
        let mut biggest: f64 = 0.0;
        for u in 0..d.len() {
            if let Some(r) = d[u][a] {
                num += rep[u] * r;
                den += rep[u];
                plain += r;
                count += 1.0;
                if rep[u] > biggest {
                    biggest = rep[u];
                }
            }
        }
        let w = if den > 0.0 { num / den } else { plain / count };
        q[a] = if penalty { biggest * w } else { w };
    }
    q
}

/// Iterative refinement for a fixed number of rounds.
pub fn ir_reference(d: &Dense, beta: f64, eps: f64, rounds: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rep = vec![1.0; d.len()];
    let mut q = Vec::new();
    for _ in 0..rounds {
        q = quality_step(d, &rep, false);
        for u in 0..d.len() {
            let mut sq = 0.0;
            let mut k = 0.0;
            for a in 0..q.len() {
                if let Some(r) = d[u][a] {
                    sq += (r - q[a]) * (r - q[a]);
                    k += 1.0;
                }
            }
            rep[u] = (sq / k + eps).powf(-beta);
        }
    }
    (q, rep)
}

/// Reputation redistribution; `penalty = damping = false, theta = 1` is CR.
pub fn rr_reference(
    d: &Dense,
    theta: f64,
    penalty: bool,
    damping: bool,
    rounds: usize,
) -> (Vec<f64>, Vec<f64>) {
    let users = d.len();
    let items = d[0].len();
    let degree: Vec<f64> = d
        .iter()
        .map(|row| row.iter().filter(|r| r.is_some()).count() as f64)
        .collect();
    let max_lg = degree.iter().map(|k| k.log10()).fold(f64::MIN, f64::max);
    let mut rep: Vec<f64> = degree.iter().map(|k| k / items as f64).collect();
    let mut q = Vec::new();
    for _ in 0..rounds {
        q = quality_step(d, &rep, penalty);
        let mut tr = vec![0.0; users];
        for u in 0..users {
            let k = degree[u];
            let mut rs = Vec::new();
            let mut qs = Vec::new();
            for a in 0..items {
                if let Some(r) = d[u][a] {
                    rs.push(r);
                    qs.push(q[a]);
                }
            }
            let rbar = rs.iter().sum::<f64>() / k;
            let qbar = qs.iter().sum::<f64>() / k;
            let sr = (rs.iter().map(|x| (x - rbar).powi(2)).sum::<f64>() / k).sqrt();
            let sq = (qs.iter().map(|x| (x - qbar).powi(2)).sum::<f64>() / k).sqrt();
            let mut t = 0.0;
            if sr > 0.0 && sq > 0.0 {
                for j in 0..rs.len() {
                    t += ((rs[j] - rbar) / sr) * ((qs[j] - qbar) / sq);
                }
                t /= k;
            }
            let g = if damping {
                if max_lg > 0.0 {
                    k.log10() / max_lg
                } else {
                    0.0
                }
            } else {
                1.0
            };
            tr[u] = (g * t).max(0.0);
        }
        let s1: f64 = tr.iter().sum();
        let st: f64 = tr.iter().map(|t| t.powf(theta)).sum();
        for u in 0..users {
            rep[u] = if st > 0.0 { tr[u].powf(theta) * s1 / st } else { 0.0 };
        }
    }
    (q, rep)
}

fn dense(rows: &[&[u8]]) -> Dense {
    rows.iter()
        .map(|row| row.iter().map(|&r| (r > 0).then_some(r as f64)).collect())
        .collect()
}

/// Three small graphs; 0 marks a missing rating.
pub fn toy_graphs() -> Vec<(&'static str, Dense)> {
    vec![
        ("3x2 complete", dense(&[&[5, 2], &[4, 1], &[1, 4]])),
        ("5x5 one spammer", spammer_graph()),
        (
            "4x5 sparse",
            dense(&[&[5, 3, 0, 1, 4], &[4, 0, 2, 1, 5], &[0, 2, 3, 0, 4], &[5, 3, 1, 2, 0]]),
        ),
    ]
}

/// Four users rate close to qualities 1..5; user 4 rates at random.
pub fn spammer_graph() -> Dense {
    dense(&[
        &[1, 2, 3, 4, 5],
        &[1, 2, 4, 4, 5],
        &[2, 2, 3, 5, 5],
        &[1, 3, 3, 4, 4],
        &[5, 1, 4, 2, 3],
    ])
}
