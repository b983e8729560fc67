//! Loss, truncated BPTT, Adadelta, the epoch loop and a gradient checker.

mod adadelta;
mod backward;
mod gradcheck;
mod loss;
mod trainer;

pub use adadelta::{adadelta_step, adadelta_update, AdadeltaState};
pub use backward::{accumulate_gradients, backward_tbptt, Backprop, GradientSet};
pub use gradcheck::{
    gradient_check, relative_error, truncated_loss, truncated_token_losses, GradCheckEntry,
    GradCheckReport, FD_STEP,
};
pub use loss::{cross_entropy, token_loss, Loss, LOG_FLOOR};
pub use trainer::{
    accuracy, format_epoch_log, mean_loss, train, EpochRecord, TrainConfig, TrainOutcome, Trainer,
};
