"""HTTP service for live facilitated sessions."""
