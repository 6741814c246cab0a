"""Gender-hint translation toolkit"""
