use crate::error::{Error, Result};
use crate::models::{Hyperparams, Model};
use crate::numerics::{AdamState, DenseMatrix};
use crate::scalar::Scalar;
use crate::training::objective::{apply_step, batch_objective, content_mse, Objective, Owned};
use crate::training::{make_batches, TrainSet};

/// Item batches of one epoch, as active item ids.
pub fn epoch_batches<T: Scalar>(set: &TrainSet<T>, hyper: &Hyperparams, seed: u64, epoch: usize) -> Vec<Vec<usize>> {
    let active = set.active_items();
    if hyper.full_batch {
        return vec![active.to_vec()];
    }
    make_batches(active.len(), hyper.batch_items, seed, epoch)
        .batches
        .into_iter()
        .map(|b| b.into_iter().map(|p| active[p]).collect())
        .collect()
}

/// One epoch of content regression `Σ ‖target_i − φ(x_i)‖²` on the content
/// network only. Returns the summed pre-step batch losses.
pub fn gd_content_mse<T: Scalar>(
    model: &mut Model<T>,
    set: &TrainSet<T>,
    targets: &DenseMatrix<T>,
    adam: &mut AdamState<T>,
    batches: &[Vec<usize>],
) -> Result<T> {
    let mut total = T::zero();
    for batch in batches {
        let (loss, grads) = content_mse(model, set, targets, batch, true)?;
        total += loss;
        let grads = grads.expect("gradient requested");
        let net = &mut model.extractor.as_mut().expect("content network checked").net;
        adam.step(net.param_slices_mut(), grads.slices())?;
    }
    if !model.is_finite() {
        return Err(Error::NonFinite("content network diverged".into()));
    }
    Ok(total)
}

/// One epoch of weighted prediction error descent on the `owned` parameters.
/// Each batch objective covers its items for every user, with the user
/// regularizer scaled by the batch's share of active items.
pub fn gd_wpe<T: Scalar>(
    model: &mut Model<T>,
    set: &TrainSet<T>,
    objective: &Objective,
    owned: Owned,
    adam: &mut AdamState<T>,
    batches: &[Vec<usize>],
) -> Result<T> {
    let n_active = T::of(set.active_items().len() as f64);
    let mut total = T::zero();
    for batch in batches {
        let scale = T::of(batch.len() as f64) / n_active;
        let (loss, grads) = batch_objective(model, set, objective, batch, scale, Some(owned))?;
        total += loss;
        apply_step(model, owned, adam, grads.expect("gradient requested"))?;
    }
    if !model.is_finite() {
        return Err(Error::NonFinite("parameters diverged".into()));
    }
    Ok(total)
}
