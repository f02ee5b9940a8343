use super::*;
use crate::dynamics::{integrate, ClassicalState, FlowOptions, KineticPotential};
use num_complex::Complex64 as C64;

#[test]
fn field_header_layout() {
    let bytes = encode_field(&[2, 3], &[C64::new(1.0, -2.0); 6]).unwrap();
    assert_eq!(&bytes[..4], b"MBO1");
    assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
    assert_eq!(&bytes[8..12], &2u32.to_le_bytes());
    assert_eq!(&bytes[12..20], &2u64.to_le_bytes());
    assert_eq!(&bytes[20..28], &3u64.to_le_bytes());
    assert_eq!(bytes[28], 0);
    assert_eq!(&bytes[29..37], &1.0f64.to_le_bytes());
    assert_eq!(&bytes[37..45], &(-2.0f64).to_le_bytes());
    assert_eq!(bytes.len(), 29 + 6 * 16);
}

#[test]
fn field_round_trip_is_bit_exact() {
    let data: Vec<C64> = (0..24).map(|i| C64::new((i as f64).sin() * 1e-300, 1.0 / (i as f64 + 0.1))).collect();
    let (dims, back) = decode_field(&encode_field(&[2, 3, 4], &data).unwrap()).unwrap();
    assert_eq!(dims, vec![2, 3, 4]);
    assert!(data.iter().zip(&back).all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()));
}

#[test]
fn corrupt_fields_are_rejected() {
    let good = encode_field(&[2], &[C64::new(0.0, 0.0); 2]).unwrap();
    let mut bad = good.clone();
    bad[0] = b'X';
    assert!(decode_field(&bad).is_err());
    assert!(decode_field(&good[..good.len() - 1]).is_err());
    let mut long = good.clone();
    long.push(0);
    assert!(decode_field(&long).is_err());
    let mut dtype = good;
    dtype[16] = 7;
    assert!(decode_field(&dtype).is_err());
    assert!(encode_field(&[3], &[C64::new(0.0, 0.0); 2]).is_err());
}

#[test]
fn numbers_use_seventeen_digits() {
    assert_eq!(Cell::Num(0.1).render(), "1.0000000000000001e-1");
    assert_eq!(Cell::Num(-0.25).render(), "-2.5000000000000000e-1");
    let v = 1.0 / 3.0;
    assert_eq!(Cell::Num(v).render().parse::<f64>().unwrap().to_bits(), v.to_bits());
}

#[test]
fn table_round_trip() {
    let mut t = Table::new("demo", &["h", "slope", "note"]);
    t.push(vec![0.1.into(), 2.0000000000000004.into(), "floor".into()]).unwrap();
    t.push(vec![0.05.into(), (-1e-17).into(), "a, b".into()]).unwrap();
    assert!(t.push(vec![1.0.into()]).is_err());
    let csv = t.to_csv().unwrap();
    assert!(csv.starts_with("h,slope,note\n"));
    assert_eq!(Table::from_csv("demo", &csv).unwrap(), t);
}

#[test]
fn empty_index_has_only_a_header() {
    let dir = tempfile::tempdir().unwrap();
    ArtifactIndex::default().write(dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join(INDEX_FILE)).unwrap();
    assert_eq!(text, "path,kind,description\n");
    assert!(ArtifactIndex::read(dir.path()).unwrap().entries.is_empty());
}

#[test]
fn trajectory_schema() {
    let start = ClassicalState::new(vec![0.0, 1.0], vec![0.5, 0.0]).unwrap();
    let traj = integrate(&KineticPotential::free(2), &start, FlowOptions::new(0.1, 0.5), true).unwrap();
    let t = trajectory_table("traj", &traj).unwrap();
    let want = [
        "t", "x1", "x2", "xi1", "xi2", "re_Y11", "im_Y11", "re_Y12", "im_Y12", "re_Y21", "im_Y21", "re_Y22", "im_Y22", "re_Z11",
        "im_Z11", "re_Z12", "im_Z12", "re_Z21", "im_Z21", "re_Z22", "im_Z22", "delta", "energy",
    ];
    assert_eq!(t.columns, want);
    assert_eq!(t.len(), traj.len());
    let flat = integrate(&KineticPotential::free(1), &ClassicalState::new(vec![0.0], vec![1.0]).unwrap(), FlowOptions::new(0.1, 0.2), false)
        .unwrap();
    assert_eq!(trajectory_table("f", &flat).unwrap().columns, ["t", "x1", "xi1", "delta", "energy"]);
}
