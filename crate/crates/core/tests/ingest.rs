mod common;

use claimclass::ingest::*;
use std::io::Write;

fn load(policies: &str, claims: &str) -> Result<LabeledDataset, IngestError> {
    let dir = tempfile::tempdir().unwrap();
    let (p, c) = (dir.path().join("pol.csv"), dir.path().join("claim.csv"));
    std::fs::File::create(&p).unwrap().write_all(policies.as_bytes()).unwrap();
    std::fs::File::create(&c).unwrap().write_all(claims.as_bytes()).unwrap();
    load_dataset(&p, &c, "-")
}

#[test]
fn join_labels_and_totals() {
    let (p, c) = common::synthetic_tables(200, 0.15, 11, false);
    let dataset = load(&p, &c).unwrap();
    assert_eq!(dataset.len(), 200);

    // Recount the claim table by hand.
    let mut expected_claims = 0u64;
    let mut expected_amount = 0.0;
    let mut claimed = std::collections::BTreeSet::new();
    for line in c.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        claimed.insert(format!("{}-{}", f[0], f[1]));
        expected_claims += f[2].parse::<u64>().unwrap();
        expected_amount += f[3].parse::<f64>().unwrap();
    }
    assert_eq!(dataset.total_claims(), expected_claims);
    assert!((dataset.total_amount() - expected_amount).abs() < 1e-6);
    for row in &dataset.rows {
        let claims = claimed.contains(&row.policy.id_policy);
        assert_eq!(row.label == Label::Claim, claims, "{}", row.policy.id_policy);
        assert_eq!(row.label, Label::from_claim_count(row.claim_nb));
    }
    let histogram = claim_frequency_histogram(&dataset);
    assert_eq!(histogram.values().sum::<usize>(), 200);
    assert_eq!(histogram.get(&0).copied().unwrap_or(0), 200 - claimed.len());
}

#[test]
fn blank_vehicle_age_is_missing_then_imputed() {
    let (p, c) = common::synthetic_tables(41, 0.2, 12, true);
    let dataset = load(&p, &c).unwrap();
    let missing: Vec<&str> = dataset
        .rows
        .iter()
        .filter(|r| r.policy.vh_age.is_none())
        .map(|r| r.policy.id_policy.as_str())
        .collect();
    assert_eq!(missing, vec!["C00020-V00020"]);

    let dropped = impute_vh_age(dataset.clone(), &ImputeStrategy::Drop).unwrap();
    assert_eq!(dropped.len(), 40);

    let mut ages: Vec<u32> = dataset.rows.iter().filter_map(|r| r.policy.vh_age).collect();
    ages.sort_unstable();
    let median = (ages[19] + ages[20]) as f64 / 2.0;
    let filled = impute_vh_age(dataset.clone(), &ImputeStrategy::Median).unwrap();
    assert_eq!(filled.rows[20].policy.vh_age, Some(median.round() as u32));

    let external = ImputeStrategy::ExternalValue(vec![("C00020-V00020".into(), 7)]);
    let filled = impute_vh_age(dataset.clone(), &external).unwrap();
    assert_eq!(filled.rows[20].policy.vh_age, Some(7));
    let wrong = ImputeStrategy::ExternalValue(vec![("nobody".into(), 7)]);
    assert!(matches!(impute_vh_age(dataset, &wrong), Err(IngestError::Imputation(_))));
}

#[test]
fn header_only_tables_give_an_empty_dataset() {
    let (p, c) = common::synthetic_tables(0, 0.1, 13, false);
    let dataset = load(&p, &c).unwrap();
    assert!(dataset.is_empty());
    assert_eq!(dataset.total_claims(), 0);
}

#[test]
fn bad_cells_name_line_and_column() {
    let (p, c) = common::synthetic_tables(5, 0.0, 14, false);
    // Break the bonus on the third data row (file line 4).
    let mut lines: Vec<String> = p.lines().map(String::from).collect();
    let header: Vec<&str> = lines[0].split(',').collect();
    let col = header.iter().position(|h| *h == "pol_bonus").unwrap();
    let mut cells: Vec<String> = lines[3].split(',').map(String::from).collect();
    cells[col] = "9.9".into();
    lines[3] = cells.join(",");
    let broken = lines.join("\n") + "\n";
    match load(&broken, &c) {
        Err(IngestError::Field { line, column, .. }) => {
            assert_eq!(line, 4);
            assert_eq!(column, "pol_bonus");
        }
        other => panic!("expected a field error, got {other:?}"),
    }

    cells[col] = "abc".into();
    lines[3] = cells.join(",");
    let err = load(&(lines.join("\n") + "\n"), &c).unwrap_err().to_string();
    assert!(err.contains("line 4") && err.contains("pol_bonus"), "{err}");
}

#[test]
fn missing_columns_orphans_and_duplicates() {
    let (p, c) = common::synthetic_tables(5, 0.0, 15, false);
    let no_speed = p.replace("vh_speed", "vh_sped");
    assert!(matches!(load(&no_speed, &c), Err(IngestError::MissingColumn(name)) if name == "vh_speed"));

    let orphan = format!("{c}C99999,V99999,1,10.0\n");
    match load(&p, &orphan) {
        Err(IngestError::OrphanClaims(keys)) => assert_eq!(keys, vec!["C99999-V99999".to_string()]),
        other => panic!("expected orphan claims, got {other:?}"),
    }

    let mut lines: Vec<&str> = p.lines().collect();
    lines.push(lines[1]);
    let dup = lines.join("\n") + "\n";
    assert!(matches!(load(&dup, &c), Err(IngestError::DuplicatePolicy { line: 7, .. })));

    let ragged = format!("{p}C1,V1\n");
    assert!(matches!(load(&ragged, &c), Err(IngestError::Malformed { .. })));
}

#[test]
fn missing_file_reports_its_path() {
    let err = load_dataset("/definitely/not/here.csv", "/nor/here.csv", "-").unwrap_err();
    assert!(err.to_string().contains("/definitely/not/here.csv"));
}

#[test]
fn merged_csv_round_trips() {
    let dataset = common::synthetic_dataset(60, 0.3, 16);
    let mut buf = Vec::new();
    write_labeled_csv(&dataset, &mut buf).unwrap();
    let back = read_labeled_csv(buf.as_slice()).unwrap();
    assert_eq!(back, dataset);
}

#[test]
fn claim_order_does_not_change_totals() {
    let (p, c) = common::synthetic_tables(80, 0.4, 17, false);
    let mut lines: Vec<&str> = c.lines().collect();
    let header = lines.remove(0);
    lines.reverse();
    let reversed = format!("{header}\n{}\n", lines.join("\n"));
    let a = load(&p, &c).unwrap();
    let b = load(&p, &reversed).unwrap();
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!(x.claim_amount.to_bits(), y.claim_amount.to_bits());
    }
}
