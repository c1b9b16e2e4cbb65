//! The networked half of the smart cooking stack.
//!
//! [`server::Server`] hosts the control plane: a TCP telemetry listener
//! that speaks the line protocol from [`smartcook_core::wire`], and an HTTP
//! API over the per-device state kept in [`hub::Hub`]. The assistant
//! gateway ([`gateway::Gateway`]) turns typed utterances into calls against
//! that HTTP API and renders the spoken reply.

pub mod api;
pub mod clock;
pub mod config;
pub mod device;
pub mod gateway;
pub mod hub;
pub mod registry;
pub mod scenario;
pub mod server;
pub mod session;
pub mod speech;
pub mod store;

pub use config::ServiceConfig;
pub use hub::Hub;
pub use server::Server;
