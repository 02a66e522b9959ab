pub mod augment;
pub mod graver;
pub mod linalg;
pub mod models;
pub mod nfold;
pub mod objective;
pub mod oracle;
pub mod twostage;
