//! Dense feedforward networks: forward pass, losses, backpropagation, Adam,
//! mini-batch training, metrics and persistence.

pub mod activation;
pub mod adam;
pub mod backprop;
pub mod loss;
pub mod metrics;
pub mod network;
pub mod persist;
pub mod train;

pub use activation::{relu, softmax, tanh_act, Activation};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use backprop::{batch_loss, loss_and_gradients, Gradients};
pub use loss::{loss_crossentropy, loss_regression};
pub use metrics::{accuracy, rmse, ConfusionMatrix};
pub use network::{argmax, Architecture, DenseLayer, DenseNetwork, Head, InputTransform};
pub use persist::{load_model, model_from_json, model_to_json, save_model};
pub use train::{evaluate, train, Dataset, History, HistoryRecord, TrainConfig};
