use crate::decision_log::DecisionCube;
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OrderScope {
    /// One model, averaged over all logged epochs.
    ModelOverEpochs(String),
    /// All models at one epoch.
    AllModelsAt(u32),
}

/// Image indices sorted by descending mean correctness; ties go to the
/// lexicographically smaller image id.
pub fn order_images_by_mean_accuracy(cube: &DecisionCube, scope: &OrderScope) -> Result<Vec<usize>> {
    let mut hits = vec![0u32; cube.n_images()];
    let mut add = |m: usize, e: usize| {
        for (h, bit) in hits.iter_mut().zip(cube.plane(m, e).iter()) {
            *h += u32::from(bit);
        }
    };
    match scope {
        OrderScope::ModelOverEpochs(model) => {
            let m = cube.model_index(model)?;
            (0..cube.n_epochs()).for_each(|e| add(m, e));
        }
        OrderScope::AllModelsAt(epoch) => {
            let e = cube.epoch_index(*epoch)?;
            (0..cube.n_models()).for_each(|m| add(m, e));
        }
    }
    // Every image shares the same denominator, so integer hits order the means.
    let images = cube.images();
    let mut order: Vec<usize> = (0..cube.n_images()).collect();
    order.sort_by(|&a, &b| hits[b].cmp(&hits[a]).then_with(|| images[a].id.cmp(&images[b].id)));
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::cube;

    #[test]
    fn descending_means() {
        let c = cube(&[vec![true, false, true], vec![true, false, false]]);
        let o = order_images_by_mean_accuracy(&c, &OrderScope::AllModelsAt(0)).unwrap();
        assert_eq!(o, vec![0, 2, 1]);
    }

    #[test]
    fn ties_by_id() {
        // ids i0..i11 sort lexicographically as i0, i1, i10, i11, i2, ...
        let c = cube(&[vec![true; 12]]);
        let o = order_images_by_mean_accuracy(&c, &OrderScope::ModelOverEpochs("m0".into())).unwrap();
        assert_eq!(o, vec![0, 1, 10, 11, 2, 3, 4, 5, 6, 7, 8, 9]);
    }

    #[test]
    fn ascending_input_reverses() {
        let rows: Vec<Vec<bool>> = (0..4).map(|m| (0..5).map(|i| i > m).collect()).collect();
        let c = cube(&rows);
        let o = order_images_by_mean_accuracy(&c, &OrderScope::AllModelsAt(0)).unwrap();
        assert_eq!(o, vec![4, 3, 2, 1, 0]);
    }

    #[test]
    fn unknown_scope() {
        let c = cube(&[vec![true]]);
        assert!(order_images_by_mean_accuracy(&c, &OrderScope::AllModelsAt(9)).is_err());
        assert!(order_images_by_mean_accuracy(&c, &OrderScope::ModelOverEpochs("x".into())).is_err());
    }
}
