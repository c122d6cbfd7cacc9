"""Output handlers for SyncKern results."""
