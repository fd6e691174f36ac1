//! Shipped and generated problem instances.
//!
//! `desk6_case` is a small synthetic feeder used as the reference
//! instance throughout the test suite. `ieee33_case` reconstructs a
//! 33-bus feeder from the standard IEEE 33-bus branch/load data with
//! DG/ESS placements from the literature; its load profiles and weights
//! are NOT authoritative (the original study never published them) and
//! it is shipped for qualitative trend checks only. `random_desk`
//! produces seeded random radial instances small enough for the
//! brute-force oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::io::Case;
use crate::model::{
    AlgorithmConfig, Budget, DduConfig, Dg, Ess, Line, Network, Node, Scenario, ScenarioSet,
};

fn node(name: &str, weight: f64) -> Node {
    Node {
        name: name.to_string(),
        weight,
        v_min: 0.95,
        v_max: 1.05,
    }
}

/// Six-bus desk instance: a Y-shaped feeder with two vulnerable DGs, one
/// ESS, and all five lines vulnerable. Small enough for exhaustive
/// enumeration, rich enough to exercise every constraint family.
pub fn desk6_case() -> Case {
    let nodes = vec![
        node("1", 1.0),
        node("2", 1.0),
        node("3", 2.0), // priority load
        node("4", 1.0),
        node("5", 1.0),
        node("6", 1.0),
    ];
    let mk_line = |from: usize, to: usize, cost: f64| Line {
        from,
        to,
        resistance: 1.0e-5,
        reactance: 0.5e-5,
        p_cap: 1000.0,
        q_cap: 600.0,
        hardening_cost: cost,
        vulnerable: true,
    };
    let lines = vec![
        mk_line(0, 1, 3.0), // L1-2
        mk_line(1, 2, 2.0), // L2-3
        mk_line(2, 3, 1.0), // L3-4
        mk_line(1, 4, 2.0), // L2-5
        mk_line(4, 5, 1.0), // L5-6
    ];
    let dgs = vec![
        // Substation import at the root: not vulnerable, cap = feeder load.
        Dg {
            node: 0,
            g_max: 350.0,
            g_min: 0.0,
            theta_min: -0.6,
            theta_max: 0.6,
            hardening_cost: 0.0,
            vulnerable: false,
        },
        Dg {
            node: 3,
            g_max: 60.0,
            g_min: 0.0,
            theta_min: -0.46,
            theta_max: 0.46,
            hardening_cost: 1.5,
            vulnerable: true,
        },
        Dg {
            node: 5,
            g_max: 80.0,
            g_min: 0.0,
            theta_min: -0.46,
            theta_max: 0.46,
            hardening_cost: 1.5,
            vulnerable: true,
        },
    ];
    let ess = vec![Ess {
        node: 2,
        p_cap: 50.0,
        q_cap: 30.0,
        eta_dis: 0.95,
        capacity: 100.0,
    }];
    let network = Network {
        nodes,
        substation: 0,
        lines,
        dgs,
        ess,
        base_voltage: 1.0,
        horizon: 2,
    };

    let base_p = [0.0, 30.0, 100.0, 80.0, 20.0, 120.0];
    let base_q = [0.0, 10.0, 50.0, 40.0, 10.0, 60.0];
    let mut scenarios = Vec::new();
    for (prob, scale, e0) in [(0.3, 0.8, 50.0), (0.4, 1.0, 100.0), (0.3, 1.2, 80.0)] {
        scenarios.push(Scenario {
            probability: prob,
            loads_p: base_p.iter().map(|&p| vec![p * scale; 2]).collect(),
            loads_q: base_q.iter().map(|&q| vec![q * scale; 2]).collect(),
            ess_initial: vec![e0],
        });
    }

    Case {
        name: "desk6".to_string(),
        notes: Some("synthetic six-bus desk instance; fully authoritative for tests".to_string()),
        network,
        scenarios: ScenarioSet { scenarios },
        ddu: DduConfig {
            k_lines: 2,
            k_dgs: 1,
            budget: Budget::Cardinality(2),
        },
        algorithm: AlgorithmConfig::default(),
    }
}

/// Standard IEEE 33-bus branch data: (from, to, R ohm, X ohm) with the
/// receiving node's nominal load (P kW, Q kvar).
#[rustfmt::skip]
const IEEE33: &[(usize, usize, f64, f64, f64, f64)] = &[
    (1, 2, 0.0922, 0.0470, 100.0, 60.0),
    (2, 3, 0.4930, 0.2511, 90.0, 40.0),
    (3, 4, 0.3660, 0.1864, 120.0, 80.0),
    (4, 5, 0.3811, 0.1941, 60.0, 30.0),
    (5, 6, 0.8190, 0.7070, 60.0, 20.0),
    (6, 7, 0.1872, 0.6188, 200.0, 100.0),
    (7, 8, 0.7114, 0.2351, 200.0, 100.0),
    (8, 9, 1.0300, 0.7400, 60.0, 20.0),
    (9, 10, 1.0440, 0.7400, 60.0, 20.0),
    (10, 11, 0.1966, 0.0650, 45.0, 30.0),
    (11, 12, 0.3744, 0.1238, 60.0, 35.0),
    (12, 13, 1.4680, 1.1550, 60.0, 35.0),
    (13, 14, 0.5416, 0.7129, 120.0, 80.0),
    (14, 15, 0.5910, 0.5260, 60.0, 10.0),
    (15, 16, 0.7463, 0.5450, 60.0, 20.0),
    (16, 17, 1.2890, 1.7210, 60.0, 20.0),
    (17, 18, 0.7320, 0.5740, 90.0, 40.0),
    (2, 19, 0.1640, 0.1565, 90.0, 40.0),
    (19, 20, 1.5042, 1.3554, 90.0, 40.0),
    (20, 21, 0.4095, 0.4784, 90.0, 40.0),
    (21, 22, 0.7089, 0.9373, 90.0, 40.0),
    (3, 23, 0.4512, 0.3083, 90.0, 50.0),
    (23, 24, 0.8980, 0.7091, 420.0, 200.0),
    (24, 25, 0.8960, 0.7011, 420.0, 200.0),
    (6, 26, 0.2030, 0.1034, 60.0, 25.0),
    (26, 27, 0.2842, 0.1447, 60.0, 25.0),
    (27, 28, 1.0590, 0.9337, 60.0, 20.0),
    (28, 29, 0.8042, 0.7006, 120.0, 70.0),
    (29, 30, 0.5075, 0.2585, 200.0, 600.0),
    (30, 31, 0.9744, 0.9630, 150.0, 70.0),
    (31, 32, 0.3105, 0.3619, 210.0, 100.0),
    (32, 33, 0.3410, 0.5302, 60.0, 40.0),
];

/// Reconstructed 33-bus case: IEEE 33-bus loads, five 500 kW DGs at
/// N4/N11/N14/N18/N33, three 1500 kWh ESS units, sixteen vulnerable
/// overhead lines. Load scenarios are drawn by a seeded uniform +/-20%
/// sampler (the original stratified draws are unpublished).
pub fn ieee33_case() -> Case {
    let kv = 12.66_f64; // line-to-line base, kV
    // Normalize ohmic impedance so (r*P_kw + x*Q_kvar)/U0 is in p.u.
    let z_scale = 1.0 / (1000.0 * kv * kv);

    // Vulnerable set: the overhead trunk (L1-2 .. L9-10) and the first
    // two spans of each lateral; the remaining spans are treated as
    // hardened underground cable. Keeps the damaging root-side outages
    // in the adversary's reach at a tractable dimension.
    let vulnerable: [bool; 32] = {
        let mut v = [false; 32];
        for k in [0usize, 1, 2, 3, 4, 5, 6, 7, 8, 17, 18, 22, 23, 25, 26, 27] {
            v[k] = true;
        }
        v
    };

    let mut nodes = vec![node("1", 1.0)];
    let mut loads_p = vec![0.0f64];
    let mut loads_q = vec![0.0f64];
    let mut lines = Vec::new();
    for (k, &(from, to, r, x, p, q)) in IEEE33.iter().enumerate() {
        nodes.push(node(&to.to_string(), 1.0));
        loads_p.push(p);
        loads_q.push(q);
        lines.push(Line {
            from: from - 1,
            to: to - 1,
            resistance: r * z_scale,
            reactance: x * z_scale,
            p_cap: 5000.0,
            q_cap: 3000.0,
            hardening_cost: 1.0,
            vulnerable: vulnerable[k],
        });
    }
    let total_p: f64 = loads_p.iter().sum();

    let mut dgs = vec![Dg {
        // Substation import; capacity set to the total feeder load.
        node: 0,
        g_max: total_p,
        g_min: 0.0,
        theta_min: -0.62,
        theta_max: 0.62,
        hardening_cost: 0.0,
        vulnerable: false,
    }];
    for n in [4usize, 11, 14, 18, 33] {
        dgs.push(Dg {
            node: n - 1,
            g_max: 500.0,
            g_min: 0.0,
            theta_min: -0.4636, // power factor 0.9 either way
            theta_max: 0.4636,
            hardening_cost: 1.0,
            vulnerable: true,
        });
    }
    let ess = [8usize, 21, 30]
        .iter()
        .map(|&n| Ess {
            node: n - 1,
            p_cap: 500.0,
            q_cap: 300.0,
            eta_dis: 0.95,
            capacity: 1500.0,
        })
        .collect();

    let horizon = 2;
    let network = Network {
        nodes,
        substation: 0,
        lines,
        dgs,
        ess,
        base_voltage: 1.0,
        horizon,
    };

    // Seeded uniform +/-20% sampler over loads and initial storage.
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut scenarios = Vec::new();
    for prob in [0.6, 0.4] {
        let mut sp = Vec::new();
        let mut sq = Vec::new();
        for j in 0..network.nodes.len() {
            let f: f64 = rng.gen_range(0.8..=1.2);
            sp.push(vec![loads_p[j] * f; horizon]);
            sq.push(vec![loads_q[j] * f; horizon]);
        }
        let ess_initial = (0..3).map(|_| 1500.0 * rng.gen_range(0.6..=1.0)).collect();
        scenarios.push(Scenario {
            probability: prob,
            loads_p: sp,
            loads_q: sq,
            ess_initial,
        });
    }

    Case {
        name: "ieee33".to_string(),
        notes: Some(
            "reconstructed 33-bus case; loads from the standard IEEE 33-bus data, \
             DG/ESS placement and ratings from the literature. Derived numbers are \
             non-authoritative."
                .to_string(),
        ),
        network,
        scenarios: ScenarioSet { scenarios },
        ddu: DduConfig {
            k_lines: 5,
            k_dgs: 1,
            budget: Budget::Cardinality(4),
        },
        algorithm: AlgorithmConfig {
            enhancement: true,
            ..AlgorithmConfig::default()
        },
    }
}

/// Seeded random desk-scale instance: at most 8 buses, |B^v| <= 6,
/// |N^vdg| <= 2, k^L <= 2, k^G <= 1, budget <= 2, N_S <= 3, T <= 3.
pub fn random_desk(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = rng.gen_range(4..=8);
    let horizon: usize = rng.gen_range(1..=3);

    let nodes: Vec<Node> = (0..n)
        .map(|i| node(&(i + 1).to_string(), rng.gen_range(1..=3) as f64))
        .collect();

    // Random radial tree: node j attaches to a random earlier node.
    let n_vuln_lines = (n - 1).min(6);
    let mut lines = Vec::new();
    for j in 1..n {
        let parent = rng.gen_range(0..j);
        lines.push(Line {
            from: parent,
            to: j,
            resistance: rng.gen_range(0.5e-5..2.0e-5),
            reactance: rng.gen_range(0.25e-5..1.0e-5),
            p_cap: 2000.0,
            q_cap: 1200.0,
            hardening_cost: rng.gen_range(1..=3) as f64,
            vulnerable: j - 1 < n_vuln_lines,
        });
    }

    let mut total_p = 0.0;
    let mut base_p = vec![0.0f64; n];
    let mut base_q = vec![0.0f64; n];
    for j in 1..n {
        base_p[j] = rng.gen_range(40.0..160.0_f64).round();
        base_q[j] = (base_p[j] * rng.gen_range(0.3..0.6)).round();
        total_p += base_p[j];
    }

    let mut dgs = vec![Dg {
        node: 0,
        g_max: (total_p * rng.gen_range(0.5..0.9)).round(),
        g_min: 0.0,
        theta_min: -0.6,
        theta_max: 0.6,
        hardening_cost: 0.0,
        vulnerable: false,
    }];
    for _ in 0..rng.gen_range(1..=2) {
        dgs.push(Dg {
            node: rng.gen_range(1..n),
            g_max: rng.gen_range(40.0..150.0_f64).round(),
            g_min: 0.0,
            theta_min: -0.46,
            theta_max: 0.46,
            hardening_cost: rng.gen_range(1..=3) as f64,
            vulnerable: true,
        });
    }

    let mut ess = Vec::new();
    if rng.gen_bool(0.6) {
        ess.push(Ess {
            node: rng.gen_range(1..n),
            p_cap: rng.gen_range(30.0..80.0_f64).round(),
            q_cap: 30.0,
            eta_dis: rng.gen_range(0.85..1.0),
            capacity: rng.gen_range(50.0..150.0_f64).round(),
        });
    }

    let network = Network {
        nodes,
        substation: 0,
        lines,
        dgs,
        ess,
        base_voltage: 1.0,
        horizon,
    };

    let n_s: usize = rng.gen_range(1..=3);
    let mut probs: Vec<f64> = (0..n_s).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    // Remove rounding drift so the sum is exactly one.
    let drift: f64 = 1.0 - probs.iter().sum::<f64>();
    probs[0] += drift;

    let scenarios = probs
        .into_iter()
        .map(|probability| {
            let scale: f64 = rng.gen_range(0.8..1.2);
            Scenario {
                probability,
                loads_p: base_p.iter().map(|&p| vec![p * scale; horizon]).collect(),
                loads_q: base_q.iter().map(|&q| vec![q * scale; horizon]).collect(),
                ess_initial: network
                    .ess
                    .iter()
                    .map(|e| e.capacity * rng.gen_range(0.2..1.0))
                    .collect(),
            }
        })
        .collect();

    let budget = if rng.gen_bool(0.75) {
        Budget::Cardinality(rng.gen_range(0..=2))
    } else {
        Budget::Cost(rng.gen_range(1.0..5.0))
    };

    Case {
        name: format!("random-desk-{seed}"),
        notes: None,
        network,
        scenarios: ScenarioSet { scenarios },
        ddu: DduConfig {
            k_lines: rng.gen_range(1..=2),
            k_dgs: rng.gen_range(0..=1),
            budget,
        },
        algorithm: AlgorithmConfig {
            seed,
            ..AlgorithmConfig::default()
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_network, validate_scenarios};

    #[test]
    fn random_desks_are_valid() {
        for seed in 0..40 {
            let case = random_desk(seed);
            let nv = validate_network(&case.network);
            assert!(nv.is_empty(), "seed {}: {:?}", seed, nv);
            let sv = validate_scenarios(&case.network, &case.scenarios);
            assert!(sv.is_empty(), "seed {}: {:?}", seed, sv);
        }
    }

    #[test]
    #[ignore = "rewrites the shipped case files from the fixtures"]
    fn regenerate_shipped_cases() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("cases");
        for case in [desk6_case(), ieee33_case()] {
            let path = dir.join(format!("{}.toml", case.name));
            crate::io::save_case(&case, &path).unwrap();
        }
    }

    #[test]
    fn shipped_cases_match_the_fixtures() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("cases");
        for case in [desk6_case(), ieee33_case()] {
            let path = dir.join(format!("{}.toml", case.name));
            let loaded = crate::io::load_case(&path).unwrap();
            assert_eq!(loaded, case, "{} drifted from its fixture", path.display());
        }
    }

    #[test]
    fn ieee33_is_valid() {
        let case = ieee33_case();
        assert!(validate_network(&case.network).is_empty());
        assert!(validate_scenarios(&case.network, &case.scenarios).is_empty());
        assert_eq!(case.network.nodes.len(), 33);
        assert_eq!(case.network.lines.len(), 32);
        let total: f64 = IEEE33.iter().map(|r| r.4).sum();
        assert_eq!(total, 3715.0);
    }
}
