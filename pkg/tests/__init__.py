"""Test suite for ussl-desk"""
