use crate::bits::BitPlane;
use crate::decision_log::{DecisionCube, ImageInfo, ModelInfo};

/// Single-epoch cube (epoch 0) with models `m0..` and images `i0..`.
pub(crate) fn cube(rows: &[Vec<bool>]) -> DecisionCube {
    let n = rows[0].len();
    DecisionCube::from_parts(
        (0..rows.len())
            .map(|m| ModelInfo { id: format!("m{m}"), condition: "c".into() })
            .collect(),
        vec![0],
        (0..n).map(|i| ImageInfo { id: format!("i{i}"), true_label: 0 }).collect(),
        rows.iter().map(|r| BitPlane::from_bools(r)).collect(),
        None,
    )
    .unwrap()
}
