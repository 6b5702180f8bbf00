//! Synthetic policy and claim tables for integration tests.
#![allow(dead_code)]

use claimclass::ingest::{LabeledDataset, POLICY_COLUMNS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const INSEE: [&str; 6] = ["75056", "13055", "83137", "2A004", "69123", "01004"];

/// One policy row in header order, with a blank `vh_age` when `missing_age`.
fn policy_cells(rng: &mut ChaCha8Rng, i: usize, missing_age: bool) -> Vec<String> {
    let drv2 = rng.gen_bool(0.3);
    let age1: u32 = rng.gen_range(18..90);
    let age2: u32 = if drv2 { rng.gen_range(18..90) } else { 0 };
    let cells: Vec<(&str, String)> = vec![
        ("id_policy", format!("C{i:05}-V{i:05}")),
        ("pol_bonus", format!("{:.2}", 0.5 + 0.01 * rng.gen_range(0..100) as f64)),
        ("pol_coverage", ["Mini", "Median1", "Median2", "Maxi"][rng.gen_range(0..4)].into()),
        ("pol_duration", rng.gen_range(0..40u32).to_string()),
        ("pol_sit_duration", rng.gen_range(0..20u32).to_string()),
        ("pol_pay_freq", ["Yearly", "Biannual", "Quarterly", "Monthly"][rng.gen_range(0..4)].into()),
        ("pol_payd", ["Yes", "No"][rng.gen_range(0..2)].into()),
        ("pol_usage", ["WorkPrivate", "Retired", "Professional", "AllTrips"][rng.gen_range(0..4)].into()),
        ("pol_insee_code", INSEE[rng.gen_range(0..INSEE.len())].into()),
        ("drv_drv2", if drv2 { "Yes" } else { "No" }.into()),
        ("drv_age1", age1.to_string()),
        ("drv_age2", if drv2 { age2.to_string() } else { "0".into() }),
        ("drv_sex1", ["M", "F"][rng.gen_range(0..2)].into()),
        ("drv_sex2", if drv2 { ["M", "F"][rng.gen_range(0..2)].into() } else { String::new() }),
        ("drv_age_lic1", (age1 - 17).min(rng.gen_range(0..40)).to_string()),
        ("drv_age_lic2", if drv2 { (age2 - 17).to_string() } else { "0".into() }),
        ("vh_age", if missing_age { String::new() } else { rng.gen_range(1..30u32).to_string() }),
        ("vh_cyl", rng.gen_range(900..3000u32).to_string()),
        ("vh_din", rng.gen_range(50..250u32).to_string()),
        ("vh_fuel", ["Diesel", "Gasoline", "Hybrid"][rng.gen_range(0..3)].into()),
        ("vh_make", ["RENAULT", "PEUGEOT", "CITROEN"][rng.gen_range(0..3)].into()),
        ("vh_model", format!("M{}", rng.gen_range(0..20))),
        ("vh_sale_begin", rng.gen_range(0..30u32).to_string()),
        ("vh_sale_end", rng.gen_range(0..30u32).to_string()),
        ("vh_speed", rng.gen_range(140..250u32).to_string()),
        ("vh_type", ["Tourism", "Commercial"][rng.gen_range(0..2)].into()),
        ("vh_value", rng.gen_range(5000..60000u32).to_string()),
        ("vh_weight", rng.gen_range(800..2500u32).to_string()),
    ];
    debug_assert_eq!(cells.len(), POLICY_COLUMNS.len());
    cells.into_iter().map(|(_, v)| v).collect()
}

/// `(policy_csv, claim_csv)` with `n` policies, roughly `claim_rate` of them
/// claiming, and one missing `vh_age` when `with_missing_age`.
pub fn synthetic_tables(n: usize, claim_rate: f64, seed: u64, with_missing_age: bool) -> (String, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut policies = String::from("id_client,id_vehicle,");
    policies.push_str(&POLICY_COLUMNS.iter().map(|(name, _)| *name).collect::<Vec<_>>().join(","));
    policies.push('\n');
    let mut claims = String::from("id_client,id_vehicle,claim_nb,claim_amount\n");
    for i in 0..n {
        let cells = policy_cells(&mut rng, i, with_missing_age && i == n / 2);
        policies.push_str(&format!("C{i:05},V{i:05},{}\n", cells.join(",")));
        if rng.gen_bool(claim_rate) {
            let rows = rng.gen_range(1..3);
            for _ in 0..rows {
                let amount = rng.gen_range(-500.0..5000.0f64);
                claims.push_str(&format!("C{i:05},V{i:05},1,{amount:.2}\n"));
            }
        }
    }
    (policies, claims)
}

/// The tables above, already merged.
pub fn synthetic_dataset(n: usize, claim_rate: f64, seed: u64) -> LabeledDataset {
    use claimclass::ingest::{aggregate_claims, merge, read_claims, read_policies};
    let (p, c) = synthetic_tables(n, claim_rate, seed, false);
    let policies = read_policies(p.as_bytes()).unwrap();
    let claims = read_claims(c.as_bytes()).unwrap();
    merge(policies, &aggregate_claims(&claims, "-").unwrap()).unwrap()
}

pub fn cas_data_dir() -> Option<std::path::PathBuf> {
    let dir = std::path::PathBuf::from(std::env::var_os("CLAIMCLASS_DATA_DIR")?);
    (dir.join("pg17trainpol.csv").is_file() && dir.join("pg17trainclaim.csv").is_file()).then_some(dir)
}
