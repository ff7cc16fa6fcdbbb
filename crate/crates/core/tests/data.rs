mod common;

use common::*;
use robust_design::data::{Bounds, Dataset, FoldAssignment, RoleSchema, VariableRole};
use robust_design::Error;

fn plant_schema() -> RoleSchema {
    let mut s = RoleSchema::new();
    for c in names("x", 10) {
        s.push(c, VariableRole::Control);
    }
    for z in names("z", 6) {
        s.push(z, VariableRole::Noise);
    }
    s.with("y", VariableRole::Response)
}

fn plant_csv(rows: usize, seed: u64) -> String {
    let mut r = rng(seed);
    let mut header: Vec<String> = names("x", 10);
    header.extend(names("z", 6));
    header.push("y".into());
    let mut out = header.join(",") + "\n";
    for _ in 0..rows {
        let row: Vec<String> = (0..17).map(|_| format!("{}", 10.0 * normal(&mut r))).collect();
        out += &(row.join(",") + "\n");
    }
    out
}

#[test]
fn plant_sized_file_is_accepted() {
    let d = Dataset::read_csv(plant_csv(214, 1).as_bytes(), &plant_schema()).unwrap();
    assert_eq!(d.n(), 214);
    assert_eq!(d.control_ids().len(), 10);
    assert_eq!(d.noise_ids().len(), 6);
    assert_eq!(d.response_id(), "y");
}

#[test]
fn csv_round_trip_is_exact() {
    let d = Dataset::read_csv(plant_csv(50, 2).as_bytes(), &plant_schema()).unwrap();
    let mut buf = Vec::new();
    d.write_csv(&mut buf).unwrap();
    let back = Dataset::read_csv(buf.as_slice(), &plant_schema()).unwrap();
    for name in d.names() {
        assert_eq!(d.column(name), back.column(name));
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    std::fs::write(&path, &buf).unwrap();
    let loaded = Dataset::load(&path, &plant_schema()).unwrap();
    assert_eq!(loaded.column("z3"), d.column("z3"));
}

#[test]
fn bad_files_are_rejected() {
    let text = plant_csv(5, 3);
    let no_y = text.replacen(",y\n", ",w\n", 1);
    assert!(matches!(Dataset::read_csv(no_y.as_bytes(), &plant_schema()), Err(Error::MissingColumn(c)) if c == "y"));

    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut cells: Vec<&str> = lines[2].split(',').collect();
    cells[4] = "NA";
    lines[2] = cells.join(",");
    let gap = lines.join("\n");
    assert!(matches!(Dataset::read_csv(gap.as_bytes(), &plant_schema()), Err(Error::MissingValue { .. })));

    let header_only = lines[0].clone() + "\n";
    assert!(Dataset::read_csv(header_only.as_bytes(), &plant_schema()).is_err());
}

fn three_rows() -> Dataset {
    let schema = RoleSchema::new()
        .with("x", VariableRole::Control)
        .with("z", VariableRole::Noise)
        .with("y", VariableRole::Response);
    Dataset::from_columns(&schema, vec![vec![5.0, 6.0, 9.0], vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 0.0]]).unwrap()
}

#[test]
fn centering_and_idempotence() {
    let d = three_rows();
    let c = d.standardize_noise(false);
    assert_eq!(c.column("z").unwrap(), [-1.0, 0.0, 1.0]);
    assert_eq!(c.column("x"), d.column("x"));
    assert_eq!(c.standardize_noise(false).column("z"), c.column("z"));

    let u = d.standardize_noise(true);
    let again = u.standardize_noise(true);
    for (a, b) in u.column("z").unwrap().iter().zip(again.column("z").unwrap()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn duplicated_noise_gives_singular_covariance() {
    let mut r = rng(4);
    let z: Vec<f64> = (0..100).map(|_| normal(&mut r)).collect();
    let x: Vec<f64> = (0..100).map(|_| normal(&mut r)).collect();
    let schema = RoleSchema::new()
        .with("x", VariableRole::Control)
        .with("z1", VariableRole::Noise)
        .with("z2", VariableRole::Noise)
        .with("y", VariableRole::Response);
    let d = Dataset::from_columns(&schema, vec![x.clone(), z.clone(), z, x]).unwrap();
    let cov = d.noise_covariance().unwrap();
    let eig = cov.clone().symmetric_eigen().eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    assert!(lo.abs() < 1e-12 * hi);
    assert!((cov[(0, 1)] - cov[(0, 0)]).abs() < 1e-12);
}

#[test]
fn folds_need_enough_rows() {
    assert!(matches!(FoldAssignment::new(3, 5, 0), Err(Error::FoldCount { .. })));
    let f = FoldAssignment::new(23, 5, 1).unwrap();
    let sizes = f.fold_sizes();
    assert_eq!(sizes.iter().sum::<usize>(), 23);
    assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    let (train, test) = f.split(2);
    assert_eq!(train.len() + test.len(), 23);
    assert_eq!(f, FoldAssignment::new(23, 5, 1).unwrap());
}

#[test]
fn bounds_cover_the_data() {
    let d = Dataset::read_csv(plant_csv(60, 5).as_bytes(), &plant_schema()).unwrap();
    let ids = d.control_ids();
    let obs = Bounds::observed(&d, &ids).unwrap();
    let wide = Bounds::sigma_box(&d, &ids, 4.0).unwrap();
    for row in 0..d.n() {
        let x: Vec<f64> = ids.iter().map(|c| d.column(c).unwrap()[row]).collect();
        assert!(obs.contains(&x));
    }
    assert!(Bounds::new(vec![1.0], vec![0.0]).is_err());
    assert_eq!(wide.dim(), 10);
}
