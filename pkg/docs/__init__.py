"""
Reference text shipped with the toolkit
"""
