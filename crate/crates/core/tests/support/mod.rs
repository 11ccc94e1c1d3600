pub mod mutate;
pub mod oracle;
