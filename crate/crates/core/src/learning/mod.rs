//! Behavioral cloning of schedulers into MLP policies and shielded
//! fine-tuning.

mod config;
mod finetune;
mod shield;
mod train;

pub use config::{Correction, TrainConfig};
pub use finetune::{shielded_finetune, FinetuneReport};
pub use shield::{build_shield, Shield};
pub use train::{
    accuracy, clone_behavior, demos_from_policy, load_demos, loss, loss_and_gradient, read_demos, write_demos,
    write_training_log, Demo, EpochLog, Gradient,
};
