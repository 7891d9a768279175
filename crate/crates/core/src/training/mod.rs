//! Estimation procedures: weighted ALS, hybrid ALS plus gradient training,
//! joint gradient training, their losses, and item batching.

mod als;
mod batches;
mod gd;
mod objective;
mod set;
mod state_io;
mod trainer;

pub use als::{als_sweep_items, als_sweep_users, als_update_h, als_update_w};
pub use batches::{make_batches, BatchSchedule};
pub use gd::{epoch_batches, gd_content_mse, gd_wpe};
pub use objective::{
    apply_step, batch_objective, content_mse, flat_params, full_gradient, loss_content_free, loss_relaxed,
    loss_strict, objective_value, set_flat_params, slot_lengths, Gradients, Objective, Owned,
};
pub use set::{Observation, TrainSet};
pub use state_io::{load_state, read_state, save_state, write_state};
pub use trainer::{
    phase_of, run_training, total_steps, train, train_dcb, train_mf_hybrid, train_mf_uni, train_ncacf, train_wmf,
    Best, EpochRecord, Phase, TrainOptions, TrainReport, TrainState, Validator,
};
