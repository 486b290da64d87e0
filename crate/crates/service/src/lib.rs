//! Network control plane for a live simulation: JSON requests over a
//! WebSocket, one response per request, and server-pushed tick reports.
//!
//! [`Session`] holds all protocol logic and is usable without a socket;
//! [`serve`] wraps it in a threaded tungstenite server.

mod protocol;
mod queue;
mod server;
mod session;

pub use protocol::{ErrorCode, Push, Request, Response, ResponseError, PROTOCOL_VERSION, VERBS};
pub use queue::ReportQueue;
pub use server::{serve, ServeOptions, ServerHandle};
pub use session::{Handled, Session};
