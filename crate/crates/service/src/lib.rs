//! Live-play gateway for the rhythm dungeon.
//!
//! The server owns all judgement: clients post timestamped presses per
//! window and render whatever comes back. Ledger browsing needs no
//! credentials.

pub mod api;
pub mod clock;
pub mod live;

pub use api::{App, ApiError, ServiceConfig};
pub use clock::{median_offset, Clock, ManualClock, PingSample, SystemClock};
pub use live::{replay_session, LiveSession, SessionStart};
