mod common;

use isoguard::formats::{read_json, write_json, RfeFile, TransformsFile};
use isoguard::synth::{generate_kdd_like, KddLikeSpec};
use isoguard_core::data::TransformState;
use isoguard_core::feature_selection::{rfe_select, ExtraTreesParams};

#[test]
fn transforms_round_trip_exactly() {
    let ds = generate_kdd_like(&KddLikeSpec { n_rows: 400, seed: 5, ..Default::default() }).unwrap();
    let state = TransformState::fit(&ds).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("transforms.json");
    write_json(&path, &TransformsFile::from_state(&state)).unwrap();

    let value: serde_json::Value = read_json(&path).unwrap();
    assert_eq!(value["encoders"]["protocol_type"], serde_json::json!({"icmp": 0, "tcp": 1, "udp": 2}));
    assert!(value["scaler"]["duration"]["mean"].is_f64());
    assert_eq!(value["scaler"]["urgent"]["std"], serde_json::json!(0.0));

    let file: TransformsFile = read_json(&path).unwrap();
    let back = file.to_state(&path).unwrap();
    assert_eq!(back.apply(&ds).unwrap(), state.apply(&ds).unwrap());
}

#[test]
fn transforms_reject_gapped_codes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    common::write(&path, r#"{"encoders": {"p": {"a": 0, "b": 2}}, "scaler": {}}"#);
    let file: TransformsFile = read_json(&path).unwrap();
    assert!(file.to_state(&path).is_err());
}

#[test]
fn rfe_file_round_trips() {
    let ds = generate_kdd_like(&KddLikeSpec { n_rows: 300, seed: 2, ..Default::default() }).unwrap();
    let state = TransformState::fit(&ds).unwrap();
    let x = state.apply(&ds).unwrap().to_matrix().unwrap();
    let params = ExtraTreesParams { n_trees: 10, ..Default::default() };
    let rfe = rfe_select(&x, ds.target(), 15, 4, &params).unwrap();
    let file = RfeFile::from_result(ds.column_names(), &rfe);
    assert_eq!(file.names.len(), 15);
    assert_eq!(file.trace.len(), 26);
    assert_eq!(file.ranked_names()[0], ds.column_names()[rfe.ranked_selected()[0]]);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rfe.json");
    write_json(&path, &file).unwrap();
    let back: RfeFile = read_json(&path).unwrap();
    assert_eq!(back.to_result(&path).unwrap(), rfe);
}
