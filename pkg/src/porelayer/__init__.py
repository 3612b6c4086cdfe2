"""Effective interface laws between free flow and a periodic porous bed."""
